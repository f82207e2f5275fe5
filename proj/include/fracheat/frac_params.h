#pragma once

namespace fracheat {

  // |Gamma(-s)| for 0 < s < 1, via Gamma(-s) = Gamma(1-s)/(-s).
  double gamma_abs_neg_s(double s);

  struct FracParams {
    int n = 1;
    double s = 0.5;
    double c_ns = 0.0;   // 1/((4 pi)^{n/2} |Gamma(-s)|)

    static FracParams make(int n, double s);
    // recompute c_ns and compare with the cached value
    bool consistent(double rtol = 1e-12) const;
  };

  double normalization_constant(int n, double s);

}
