#pragma once

#include "fracheat/field.h"
#include "fracheat/frac_params.h"

#include <functional>
#include <span>
#include <vector>

namespace fracheat {

  struct QuadratureSpec {
    double r_cut = 1e-3;
    double r_max = 1e4;
    int panels_per_decade = 8;
    int gh_order = 20;
    double rel_tol = 1e-6;
    long long seed = 0;
    // extra knobs, all with defaults
    bool self_convergence = true;   // rerun panels at doubled density for the error estimate
    bool use_heat_flow = true;      // use a field's exact Gaussian means when it has them
    int gh_cap_1d = 512;            // escalation cap for the Gauss-Hermite order in one dimension
    int conv_angles = 48;           // angular nodes for 2D restricted convolutions
    int conv_panels_per_decade = 4; // lag panels per decade inside Green convolutions

    void validate() const;
  };

  struct Rule {
    std::vector<double> x, w;
    std::size_t size() const { return x.size(); }
  };

  // weight e^{-z^2} on R (weights sum to sqrt(pi)); cached, thread-safe
  const Rule& gauss_hermite(int order);
  // weight 1 on [-1,1]
  const Rule& gauss_legendre(int order);
  // weight (1-x)^alpha (1+x)^beta on [-1,1], alpha, beta > -1
  const Rule& gauss_jacobi(int order, double alpha, double beta);

  double pairwise_sum(std::span<const double> v);

  struct GaussianMeanProbe {
    double r = 0.0;
    std::vector<double> weights;                 // sum to 1
    std::vector<std::vector<double>> offsets;    // y = x + offset
  };
  GaussianMeanProbe make_probe(int n, double r, int order);

  // (P_r u)(x,t) by tensor Gauss-Hermite of order spec.gh_order, nothing else
  double gaussian_mean(const FieldHandle& u, std::span<const double> x, double t, double r,
                       const QuadratureSpec& spec);

  struct MeanResult {
    double value = 0.0;
    double abs_scale = 0.0;   // mean of |integrand|, for tolerances
    bool resolved = true;
    int order = 0;
    long evals = 0;
    double discrepancy = 0.0;   // |order N - order 2N| at the last comparison
  };

  // E[u(x - 2 sqrt(a) Z, tau)] with order escalation (N vs 2N) up to the cap; uses the
  // field's heat flow or localization hint when present
  MeanResult spatial_mean(const FieldHandle& u, std::span<const double> x, double tau, double a,
                          const QuadratureSpec& spec, int start_order = 0);

  int gh_order_cap(int n, const QuadratureSpec& spec);

  // Nodes/weights with sum_i w_i g(r_i) ~ int_{lo}^{hi} r^{power} g(r) dr, log-spaced panels.
  struct LagPanel {
    double r_lo = 0.0, r_hi = 0.0;
    std::vector<double> r, w;
  };
  std::vector<LagPanel> log_panels(double lo, double hi, int per_decade, double power, double rel_tol);
  // int_a^b r^{power} g(r) dr by Gauss-Jacobi at the end b; exact-ish when g ~ (b - r)^{s-1} x smooth
  // or g ~ (b - r)^s x smooth, the two endpoint behaviours of kernel snapshots and Green fields
  LagPanel endpoint_panel(double a, double b, double s, double power, int order);
  // int_0^h rho^{s-1} g(rho) d rho, g smooth
  LagPanel origin_panel(double h, double s, int order);

  // log panels over [r_cut, r_max] against r^{-1-s}
  std::vector<LagPanel> time_lag_panels(const QuadratureSpec& spec, double s);
  int nodes_per_panel(double log_width, double exponent, double rel_tol);

  // (d_t - Delta) u by finite differences: 4th order centred in x, 2nd order backward in t
  double heat_operator_fd(const FieldHandle& u, std::span<const double> x, double t);

  struct InnerResult {
    double value = 0.0;   // (d_t u - Delta u) r_cut^{1-s}/(1-s)
    double error = 0.0;   // of the extrapolated value, from splittings at r_cut, r_cut/2, r_cut/4
    double extrapolated = 0.0;   // Richardson combination of the two splittings
    double heat = 0.0;    // the finite-difference heat operator
  };
  using MeanFn = std::function<MeanResult(double r, int order_hint)>;

  // Inner panel from a known heat-operator value; mean(r) supplies P_r u for the error estimate.
  InnerResult inner_from_heat(double heat, double u0, double r_cut, double s, const MeanFn& mean,
                              const QuadratureSpec& spec);

  InnerResult inner_asymptotic(const FieldHandle& u, std::span<const double> x, double t,
                               const QuadratureSpec& spec, const FracParams& p, double r_cut = -1.0);

}
