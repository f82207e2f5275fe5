#pragma once

#include "fracheat/cylinder.h"
#include "fracheat/field.h"
#include "fracheat/frac_params.h"
#include "fracheat/grid_field.h"
#include "fracheat/quadrature.h"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fracheat {

  // 1/((4 pi)^{n/2} Gamma(s)): the constant making (d_t - Delta)^s G = delta
  double green_constant(int n, double s);
  double eval_green(const FracParams& p, std::span<const double> x, double t);

  enum class RestrictMode { Inside, Outside };

  struct RestrictedSource {
    FieldHandle base;
    ParabolicCylinder cylinder;
    RestrictMode mode = RestrictMode::Inside;

    double operator()(std::span<const double> x, double t) const;
    FieldHandle as_field() const;
  };

  struct ConvolutionResult {
    double value = 0.0;
    double error_estimate = 0.0;
    double tail = 0.0;            // extrapolated lag mass beyond r_max, unbounded lag ranges only
    double extension_mass = 0.0;  // kernel mass outside the declared domain of a grid-backed source
    bool extension_warning = false;
    long evaluations = 0;
  };

  // int_{-inf}^t int f(y,tau) G(x-y, t-tau) dy dtau. Sources with a support cylinder are
  // integrated over it with exact ball geometry; otherwise Gauss-Hermite means are used.
  ConvolutionResult convolve_green(const FracParams& p, const FieldHandle& f, std::span<const double> x,
                                   double t, const QuadratureSpec& spec);
  ConvolutionResult convolve_green(const FracParams& p, const RestrictedSource& f, std::span<const double> x,
                                   double t, const QuadratureSpec& spec);

  // Lazy G*f as a field, with exact heat flow by the semigroup property.
  FieldHandle green_field(const FracParams& p, const FieldHandle& f, const QuadratureSpec& spec);
  FieldHandle green_field(const FracParams& p, const RestrictedSource& f, const QuadratureSpec& spec);

  // fraction of kernel mass (over the lag window of the grid) that falls outside the grid box
  double extension_mass(const GridField& g, double s, std::span<const double> x, double t);

  GridField solve_w(const FracParams& p, const FieldHandle& f, const ParabolicCylinder& Q, const GridField& tmpl,
                    const QuadratureSpec& spec, int threads = 1);

  struct Decomposition {
    GridField v, w;
    FieldHandle w_field;
    std::optional<FieldHandle> v_field;   // when u was given as a field
    double spot_residual = 0.0;           // max |apply_master(u) - f| / ||f||, checked points
    int spot_points = 0;
    bool spot_ok = true;
    std::string diagnostic;
  };

  struct DecomposeOptions {
    int threads = 1;
    int spot_checks = 3;
    double spot_tol = 1e-2;
    std::optional<FieldHandle> u_field;   // analytic u for spot checks and the lazy v
  };

  Decomposition decompose(const FracParams& p, const GridField& u, const FieldHandle& f, const ParabolicCylinder& Q,
                          const QuadratureSpec& spec, const DecomposeOptions& opt = {});

  struct RepresentationPoint {
    std::vector<double> x;
    double t = 0.0;
    double u = 0.0, conv = 0.0, residual = 0.0;
  };

  struct RepresentationReport {
    double constant = 0.0;        // median residual
    double max_deviation = 0.0;   // max |residual - constant|
    double scale = 0.0;           // max |u| over the points
    double tolerance = 0.0;
    bool within_tolerance = true;
    bool hypotheses_declared = true;
    std::vector<RepresentationPoint> points;
  };

  struct SpaceTimePoint {
    std::vector<double> x;
    double t = 0.0;
  };

  RepresentationReport verify_representation(const FracParams& p, const FieldHandle& u, const FieldHandle& f,
                                             const std::vector<SpaceTimePoint>& points, const QuadratureSpec& spec,
                                             double tol = -1.0, bool nonnegative_declared = true);

  // sup_x int_Q G(x-y, t-tau) dy dtau <= C3 = T^s / Gamma(1+s), T the time extent of Q; the
  // bounding integral int_0^T rho^{s-1} d rho / Gamma(s) is evaluated by the lag panels
  double lemma_sup_constant(double s, const ParabolicCylinder& Q, const QuadratureSpec& spec);

}
