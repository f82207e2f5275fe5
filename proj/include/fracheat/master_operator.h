#pragma once

#include "fracheat/field.h"
#include "fracheat/frac_params.h"
#include "fracheat/quadrature.h"

#include <functional>
#include <span>
#include <string>

namespace fracheat {

  struct OperatorResult {
    double value = 0.0;
    double error_estimate = 0.0;
    double tail_bound = 0.0;      // bound on the discarded lag mass beyond r_max (0 with a time floor)
    bool low_confidence = false;  // error_estimate > 10 rel_tol * scale
    double horizon_lag = -1.0;    // lag where Gaussian means stopped resolving, -1 if never
    long evaluations = 0;
  };

  struct Admissibility {
    bool pass = true;
    std::string diagnostic;
  };

  Admissibility check_admissible(const FracParams& p, const FieldHandle& u, double t);

  // (d_t - Delta)^s u at (x,t)
  OperatorResult apply_master(const FracParams& p, const FieldHandle& u, std::span<const double> x,
                              double t, const QuadratureSpec& spec);

  // d_t^s u(t) with C_s = 1/|Gamma(-s)|
  OperatorResult apply_marchaud(double s, const std::function<double(double)>& u, double t,
                                const QuadratureSpec& spec);

  // (-Delta)^s g at x through the time-independent lift
  OperatorResult apply_frac_laplacian(const FracParams& p, const std::function<double(std::span<const double>)>& g,
                                      std::span<const double> x, const QuadratureSpec& spec,
                                      Growth growth = Growth::bounded());

  // int_0^inf r^{-1-s}(1 - e^{-a r}) dr / |Gamma(-s)|, by the same panels; the symbol a^s
  double symbol_integral(double a, double s, const QuadratureSpec& spec);

}
