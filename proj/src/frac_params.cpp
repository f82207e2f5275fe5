#include "fracheat/frac_params.h"
#include "fracheat/errors.h"

#include <cmath>
#include <numbers>
#include <string>

namespace fracheat {

  double gamma_abs_neg_s(double s)
  {
    if (!(s > 0.0 && s < 1.0))
      throw DomainError("fractional order s must lie in (0,1), got " + std::to_string(s));
    return std::tgamma(1.0 - s) / s;
  }

  double normalization_constant(int n, double s)
  {
    return 1.0 / (std::pow(4.0 * std::numbers::pi, 0.5 * n) * gamma_abs_neg_s(s));
  }

  FracParams FracParams::make(int n, double s)
  {
    if (n < 1)
      throw DomainError("dimension n must be >= 1, got " + std::to_string(n));
    FracParams p;
    p.n = n;
    p.s = s;
    p.c_ns = normalization_constant(n, s);
    return p;
  }

  bool FracParams::consistent(double rtol) const
  {
    if (n < 1 || !(s > 0.0 && s < 1.0))
      return false;
    double c = normalization_constant(n, s);
    return std::fabs(c - c_ns) <= rtol * c;
  }

}
