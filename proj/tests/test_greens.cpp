#include "doctest.h"
#include "oracles.h"

#include "fracheat/catalog.h"
#include "fracheat/errors.h"
#include "fracheat/field.h"
#include "fracheat/frac_params.h"
#include "fracheat/greens.h"
#include "fracheat/grid_field.h"
#include "fracheat/master_operator.h"

#include <cmath>
#include <memory>
#include <vector>

using namespace fracheat;

namespace {

  FieldHandle constant(int n, double c)
  {
    return make_field(n, [c](std::span<const double>, double) { return c; });
  }

  // e^{-k} I_0(k), the angular mean of e^{-k(1 - cos phi)}
  double scaled_i0(double k)
  {
    if (k < 500.0)
      return std::exp(-k) * std::cyl_bessel_i(0.0, k);
    const double q = 1.0 / (8.0 * k);
    return (1.0 + q + 4.5 * q * q + 37.5 * q * q * q) / std::sqrt(2.0 * oracle::pi * k);
  }

  // (1/Gamma(s)) int_0^T rho^{s-1} E(rho) d rho with E the 2D heat-kernel mass of B_R seen
  // from distance d, s = 1/2; E = (1/2rho) int_0^R r e^{-(d-r)^2/4rho} scaled_i0(dr/2rho) dr
  // and rho = sigma^2 removes the endpoint singularity
  double indicator_oracle(double d, double R, double T)
  {
    auto mass = [&](double rho) {
      if (rho <= 0.0)
        return d < R ? 1.0 : 0.0;
      const double w = 12.0 * std::sqrt(rho);
      const double lo = std::max(0.0, d - w), hi = std::min(R, d + w);
      if (hi <= lo)
        return 0.0;
      auto g = [&](double r) {
        return r * std::exp(-(d - r) * (d - r) / (4.0 * rho)) * scaled_i0(d * r / (2.0 * rho));
      };
      return oracle::simpson(g, lo, hi, 2000) / (2.0 * rho);
    };
    return oracle::simpson([&](double sg) { return 2.0 * mass(sg * sg); }, 0.0, std::sqrt(T), 1000)
           / oracle::gamma(0.5);
  }

  GridField grid_1d(double xlo, double xhi, int nx, double tlo, double thi, int nt)
  {
    return GridField::make("g", {Axis{xlo, xhi, nx}}, Axis{tlo, thi, nt});
  }

}

TEST_CASE("green constant")
{
  for (int n = 1; n <= 3; ++n)
    for (double s : {0.2, 0.5, 0.8}) {
      const double ref = 1.0 / (std::pow(4.0 * oracle::pi, 0.5 * n) * oracle::gamma(s));
      CHECK(oracle::rel(green_constant(n, s), ref) < 1e-10);
      const auto p = FracParams::make(n, s);
      std::vector<double> x(n, 0.3);
      const double t = 0.7;
      const double g = ref * std::pow(t, -(0.5 * n + 1.0 - s)) * std::exp(-0.09 * n / (4.0 * t));
      CHECK(oracle::rel(eval_green(p, x, t), g) < 1e-10);
      CHECK(eval_green(p, x, 0.0) == 0.0);
      CHECK(eval_green(p, x, -1.0) == 0.0);
    }
}

TEST_CASE("zero source, unbounded constant source")
{
  const auto p = FracParams::make(1, 0.5);
  QuadratureSpec spec;
  std::vector<double> x{0.2};
  CHECK(convolve_green(p, constant(1, 0.0), x, 1.0, spec).value == 0.0);
  CHECK_THROWS_AS(convolve_green(p, constant(1, 1.0), x, 1.0, spec), DivergenceError);
}

TEST_CASE("indicator of B_2 x (0,3) against a radial oracle")
{
  const auto p = FracParams::make(2, 0.5);
  QuadratureSpec spec;
  const auto Q = ParabolicCylinder::box({0.0, 0.0}, 2.0, 0.0, 3.0);
  RestrictedSource src{constant(2, 1.0), Q, RestrictMode::Inside};
  struct Case {
    double x1, x2, t;
  };
  for (const Case c : {Case{0.0, 0.0, 1.5}, Case{1.2, 0.5, 1.5}, Case{1.5, -1.0, 2.5}, Case{3.0, 0.0, 2.0}}) {
    CAPTURE(c.x1);
    CAPTURE(c.x2);
    std::vector<double> x{c.x1, c.x2};
    const double want = indicator_oracle(std::hypot(c.x1, c.x2), 2.0, c.t);
    const auto got = convolve_green(p, src, x, c.t, spec);
    CHECK(oracle::rel(got.value, want) < 1e-6);
  }
  // centre value in closed form: (1/Gamma(s)) int_0^T rho^{s-1}(1 - e^{-R^2/(4 rho)}) d rho
  std::vector<double> z{0.0, 0.0};
  const double centre = indicator_oracle(0.0, 2.0, 1.5);
  const double direct = oracle::simpson(
                            [](double sg) {
                              const double rho = sg * sg;
                              return 2.0 * (rho > 0 ? 1.0 - std::exp(-1.0 / rho) : 1.0);
                            },
                            0.0, std::sqrt(1.5), 2000)
                        / oracle::gamma(0.5);
  CHECK(oracle::rel(centre, direct) < 1e-6);
  // before the source switches on, nothing
  CHECK(convolve_green(p, src, z, -0.5, spec).value == 0.0);
}

TEST_CASE("solve_w: linearity, positivity, causality")
{
  const auto p = FracParams::make(1, 0.4);
  QuadratureSpec spec;
  const auto Q = ParabolicCylinder::box({0.0}, 1.0, 0.0, 1.0);
  const auto tmpl = grid_1d(-1.5, 1.5, 13, -0.25, 1.25, 7);
  auto f1 = make_field(1, [](std::span<const double> x, double t) { return 1.0 + 0.5 * std::sin(3.0 * x[0] + t); });
  auto f2 = make_field(1, [](std::span<const double> x, double t) { return 2.0 + x[0] * t; });
  const auto w1 = solve_w(p, f1, Q, tmpl, spec);
  const auto w2 = solve_w(p, f2, Q, tmpl, spec);
  const auto w12 = solve_w(p, linear_combination({{2.0, f1}, {-3.0, f2}}), Q, tmpl, spec);
  for (std::size_t i = 0; i < w1.values.size(); ++i) {
    const double lin = 2.0 * w1.values[i] - 3.0 * w2.values[i];
    CHECK(std::fabs(w12.values[i] - lin) <= 1e-8 * (std::fabs(w1.values[i]) + std::fabs(w2.values[i]) + 1e-12));
    CHECK(w1.values[i] >= 0.0);
    CHECK(w2.values[i] >= 0.0);
  }
  // nonzero inside after the start time, zero before it
  std::vector<double> z{0.0};
  CHECK(w1.interpolate(z, 1.0) > 0.0);
  CHECK(w1.interpolate(z, -0.25) == 0.0);

  // sources that agree up to t = 0.5 give the same w up to t = 0.5
  auto f3 = make_field(1, [f1](std::span<const double> x, double t) { return t <= 0.5 ? f1.eval(x, t) : 7.0; });
  const auto w3 = solve_w(p, f3, Q, tmpl, spec);
  std::vector<int> ix;
  int k = 0;
  bool some_later_differs = false;
  for (std::size_t i = 0; i < w1.values.size(); ++i) {
    w1.unravel(i, ix, k);
    if (tmpl.time_axis.node(k) <= 0.5)
      CHECK(w3.values[i] == w1.values[i]);
    else if (w3.values[i] != w1.values[i])
      some_later_differs = true;
  }
  CHECK(some_later_differs);
  // multithreaded sampling is bit-identical
  const auto w1t = solve_w(p, f1, Q, tmpl, spec, 3);
  CHECK(w1t.values == w1.values);
}

TEST_CASE("sup bound constant")
{
  QuadratureSpec spec;
  for (double s : {0.2, 0.5, 0.8}) {
    const auto Q = ParabolicCylinder::box({0.0}, 2.0, 0.0, 3.0);
    CHECK(oracle::rel(lemma_sup_constant(s, Q, spec), std::pow(3.0, s) / oracle::gamma(1.0 + s)) < 1e-8);
  }
  // sup w <= C3 sup f on a grid that covers Q and some margin
  const auto p = FracParams::make(1, 0.5);
  const auto Q = ParabolicCylinder::box({0.0}, 2.0, 0.0, 3.0);
  auto f = make_field(1, [](std::span<const double> x, double t) { return 1.0 + 0.5 * std::cos(x[0] * t); });
  const auto w = solve_w(p, f, Q, grid_1d(-3, 3, 13, 0, 4, 9), spec);
  double sup = 0.0;
  for (double v : w.values)
    sup = std::max(sup, v);
  CHECK(sup <= lemma_sup_constant(0.5, Q, spec) * 1.5);
  CHECK(sup > 0.5 * lemma_sup_constant(0.5, Q, spec));   // not trivially small
}

TEST_CASE("decomposition of u = w (+ c)")
{
  const auto p = FracParams::make(1, 0.5);
  QuadratureSpec spec;
  const auto Q = ParabolicCylinder::box({0.0}, 2.0, 0.0, 3.0);
  auto f = make_field(1, [](std::span<const double> x, double t) { return 1.0 + 0.2 * x[0] * x[0] + 0.1 * t; });
  const auto w_field = green_field(p, RestrictedSource{f, Q, RestrictMode::Inside}, spec);
  auto u = std::make_shared<GridField>(grid_1d(-2, 2, 9, 0.5, 2.5, 5));
  sample_into(*u, w_field);

  auto dec = decompose(p, *u, f, Q, spec);
  for (double v : dec.v.values)
    CHECK(std::fabs(v) < 1e-12);
  CHECK(dec.diagnostic.find("skipped") != std::string::npos);

  GridField uc = *u;
  for (auto& v : uc.values)
    v += 4.0;
  dec = decompose(p, uc, f, Q, spec);
  for (double v : dec.v.values)
    CHECK(v == doctest::Approx(4.0).epsilon(1e-12));
  for (std::size_t i = 0; i < dec.w.values.size(); ++i)
    CHECK(dec.w.values[i] + dec.v.values[i] == doctest::Approx(uc.values[i]).epsilon(1e-14));
}

TEST_CASE("decomposition spot checks with an analytic u")
{
  const auto p = FracParams::make(1, 0.5);
  QuadratureSpec spec;
  const auto Q = ParabolicCylinder::box({0.0}, 2.0, 0.0, 3.0);
  // u = e^t cos x has (d_t - d_xx)^s u = sqrt(2) e^t cos x exactly
  auto u = make_field(1, [](std::span<const double> x, double t) { return std::exp(t) * std::cos(x[0]); },
                      Growth::exponential_in_time(1.0));
  auto f = make_field(1, [](std::span<const double> x, double t) {
    return std::sqrt(2.0) * std::exp(t) * std::cos(x[0]);
  });
  auto ug = grid_1d(-2, 2, 5, 0.5, 2.5, 3);
  sample_into(ug, u);
  DecomposeOptions opt;
  opt.u_field = u;
  const auto good = decompose(p, ug, f, Q, spec, opt);
  CHECK(good.spot_points == 3);
  CHECK(good.spot_ok);
  CHECK(good.spot_residual < 1e-5);
  REQUIRE(good.v_field.has_value());
  std::vector<double> x{0.3};
  CHECK(oracle::rel(good.v_field->eval(x, 1.0) + good.w_field.eval(x, 1.0), u.eval(x, 1.0)) < 1e-14);

  auto wrong = make_field(1, [](std::span<const double>, double) { return 1.0; });
  const auto bad = decompose(p, ug, wrong, Q, spec, opt);
  CHECK_FALSE(bad.spot_ok);
  CHECK(bad.diagnostic.find("spot check") != std::string::npos);
}

TEST_CASE("representation check: constant offset and a negative control")
{
  const auto p = FracParams::make(1, 0.5);
  QuadratureSpec spec;
  const auto Q = ParabolicCylinder::box({0.0}, 1.0, 0.0, 1.0);
  auto base = make_field(1, [](std::span<const double> x, double) { return 1.0 + 0.5 * x[0]; });
  RestrictedSource src{base, Q, RestrictMode::Inside};
  const auto f = src.as_field();
  const auto w = green_field(p, src, spec);
  auto u = linear_combination({{1.0, w}, {1.0, constant(1, 5.0)}});
  std::vector<SpaceTimePoint> pts{{{0.0}, 0.5}, {{0.4}, 0.9}, {{-0.8}, 1.4}, {{2.0}, 0.7}, {{0.1}, -0.3}};
  const auto rep = verify_representation(p, u, f, pts, spec);
  CHECK(rep.constant == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(rep.within_tolerance);
  CHECK(rep.points.size() == pts.size());

  // a bump that solves nothing: residuals are not constant
  auto bump = make_field(1, [](std::span<const double> x, double t) { return std::exp(-x[0] * x[0] - t * t); });
  const auto neg = verify_representation(p, bump, f, pts, spec);
  CHECK_FALSE(neg.within_tolerance);
  CHECK(neg.max_deviation > 1e-2);
}

TEST_CASE("round trip: the operator inverts the Green convolution")
{
  QuadratureSpec spec;
  {
    const auto p = FracParams::make(1, 0.5);
    const auto Q = ParabolicCylinder::box({0.0}, 2.0, 0.0, 3.0);
    auto f = make_field(1, [](std::span<const double> x, double t) { return 1.0 + 0.3 * std::cos(x[0] - t); });
    const auto w = green_field(p, RestrictedSource{f, Q, RestrictMode::Inside}, spec);
    for (double x0 : {0.0, 0.7, -1.1}) {
      std::vector<double> x{x0};
      const double t = 1.6;
      const auto r = apply_master(p, w, x, t, spec);
      CAPTURE(x0);
      CHECK(std::fabs(r.value - f.eval(x, t)) < 1e-4);
    }
  }
  {
    const auto p = FracParams::make(2, 0.3);
    const auto Q = ParabolicCylinder::box({0.0, 0.0}, 2.0, 0.0, 3.0);
    auto f = make_field(2, [](std::span<const double>, double) { return 2.0; });
    const auto w = green_field(p, RestrictedSource{f, Q, RestrictMode::Inside}, spec);
    std::vector<double> x{0.3, -0.4};
    const auto r = apply_master(p, w, x, 2.0, spec);
    CHECK(std::fabs(r.value - 2.0) < 2e-4);
    // outside Q the source is zero
    std::vector<double> far{3.5, 0.0};
    CHECK(std::fabs(apply_master(p, w, far, 2.0, spec).value) < 2e-4);
  }
}

TEST_CASE("composed Gauss-Hermite cross-check without exact heat flow (1D)")
{
  const auto p = FracParams::make(1, 0.5);
  QuadratureSpec spec;
  spec.use_heat_flow = false;
  spec.rel_tol = 1e-4;
  const auto Q = ParabolicCylinder::box({0.0}, 2.0, 0.0, 3.0);
  auto f = make_field(1, [](std::span<const double>, double) { return 1.0; });
  const auto w = green_field(p, RestrictedSource{f, Q, RestrictMode::Inside}, spec);
  std::vector<double> x{0.0};
  const auto r = apply_master(p, w, x, 1.5, spec);
  CHECK(std::fabs(r.value - 1.0) < 1e-2);
}

TEST_CASE("green convolution input validation")
{
  const auto p = FracParams::make(2, 0.5);
  QuadratureSpec spec;
  std::vector<double> x{0.0};
  CHECK_THROWS_AS(convolve_green(p, constant(2, 0.0), x, 1.0, spec), ArgumentError);
  const auto Q = ParabolicCylinder::box({0.0, 0.0}, 1.0, 0.0, 1.0);
  CHECK_THROWS_AS(solve_w(p, constant(2, 1.0), Q, grid_1d(0, 1, 3, 0, 1, 3), spec), ArgumentError);
  CHECK_THROWS_AS(lemma_sup_constant(0.5, ParabolicCylinder::box({0.0}, -1.0, 0.0, 1.0), spec), ArgumentError);
}
