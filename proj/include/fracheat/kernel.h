#pragma once

#include "fracheat/frac_params.h"

#include <span>
#include <vector>

namespace fracheat {

  // G(dx, dt) = c_ns dt^{-(n/2+1-s)} exp(-|dx|^2/(4 dt)) for dt > 0, 0 otherwise.
  double eval_kernel(const FracParams& p, std::span<const double> dx, double dt);
  std::vector<double> eval_kernel_grad_x(const FracParams& p, std::span<const double> dx, double dt);
  // row-major n x n
  std::vector<double> eval_kernel_hess_x(const FracParams& p, std::span<const double> dx, double dt);
  double eval_kernel_dt(const FracParams& p, std::span<const double> dx, double dt);
  // log G, -inf when dt <= 0; used where G itself underflows
  double log_kernel(const FracParams& p, std::span<const double> dx, double dt);

  struct DirectionalFrame {
    std::vector<double> center;
    double delta = 1.0;
    std::vector<std::vector<double>> etas;   // 2^n entries, lexicographic in sign pattern (+ first)
    int n() const { return static_cast<int>(center.size()); }
  };

  DirectionalFrame make_frame(const FracParams& p, std::span<const double> center);

  // Orthant of d: bit i set when d_i < 0 (zeros count as positive). Index into frame.etas.
  std::size_t orthant_index(std::span<const double> d);

  // |y-x|^2 - |y-x^j|^2 - delta^2 |y-x|, x^j = x + eta_j for the orthant of y-x.
  double cosine_gap(const DirectionalFrame& frame, std::span<const double> y);

  // sup_{X>=0} X^p e^{-X/(4n)} = (4np/e)^p
  double key_constant(int n, double power);

  // Explicit constants for the derivative bounds
  //   |grad G(d)| , |hess G(d)_ij| , dt G(d) <= C * sum_j G(d + eta_j)   (|d| >= 1)
  struct DerivativeConstants { double grad, hess, dt; };
  DerivativeConstants derivative_constants(const FracParams& p);

  struct KeyInequalityResult {
    bool pass = true;
    double margin = 0.0;          // min over the sub-checks of log(rhs) - log(lhs)
    double general_margin = 0.0;  // (X)^p e^{-|y-x|^2/4tau} <= C e^{-|y-x^j|^2/4tau}
    double lemma_margin = 0.0;    // G(y-x) <= e^{-rate |y-x|/tau} sum_j G(y-x+eta_j)
    double grad_margin = 0.0;
    double hess_margin = 0.0;
    double dt_margin = 0.0;
  };

  // rate_factor multiplies |y-x|/tau in the lemma exponent; the law-of-cosines bound gives 1/(4n).
  KeyInequalityResult check_key_inequality(const FracParams& p, const DirectionalFrame& frame,
                                           std::span<const double> y, double tau, double power,
                                           double slack = 1e-12, double rate_factor = -1.0);

  // Seeded sweep over the precondition domain: random centre in [-1,1]^n, direction uniform on the
  // sphere, |y - center| log-uniform in [1,100], tau log-uniform in [1e-4,1e3], power in {1,2}.
  struct KeySuiteResult {
    long samples = 0;
    long violations = 0;
    long gap_violations = 0;   // cosine_gap < 0
    double min_margin = 0.0;
    std::vector<double> worst_y, worst_center;
    double worst_tau = 0.0, worst_power = 0.0;
  };
  KeySuiteResult key_inequality_suite(const FracParams& p, long samples, unsigned long long seed, double slack = 1e-12);

}
