#include "doctest.h"
#include "oracles.h"

#include "fracheat/errors.h"
#include "fracheat/field.h"
#include "fracheat/grid_field.h"
#include "fracheat/regularity.h"

#include "json.hpp"

#include <cmath>
#include <functional>
#include <vector>

using namespace fracheat;

namespace {

  GridField sample_1d(int nx, double xlo, double xhi, int nt, double tlo, double thi,
                      const std::function<double(double, double)>& u)
  {
    GridField g = GridField::make("u", {Axis{xlo, xhi, nx}}, Axis{tlo, thi, nt});
    std::vector<double> x;
    double t;
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      g.coords(i, x, t);
      g.values[i] = u(x[0], t);
    }
    return g;
  }

  const ParabolicCylinder unit_box = ParabolicCylinder::box({0.0}, 1.0, 0.0, 1.0);

  HolderSpec holder(double alpha, long budget = 200000)
  {
    HolderSpec h;
    h.alpha = alpha;
    h.pair_budget = budget;
    return h;
  }

}

TEST_CASE("constants have zero seminorm")
{
  const auto u = sample_1d(129, -1, 1, 9, 0, 1, [](double, double) { return 2.5; });
  for (double a : {0.2, 0.5, 0.8}) {
    const auto r = estimate_parabolic_holder(u, unit_box, holder(a));
    CHECK(r.seminorm == 0.0);
    CHECK(r.sup_norm == 2.5);
  }
}

TEST_CASE("|x1|^0.6 : exponent and seminorm")
{
  const auto u = sample_1d(257, -1, 1, 3, 0, 1, [](double x, double) { return std::pow(std::fabs(x), 0.6); });
  const auto r = estimate_parabolic_holder(u, unit_box, holder(0.3));
  CHECK(r.case_name == "holder(i)");
  CHECK(r.effective_exponent == doctest::Approx(0.6).epsilon(0.05 / 0.6));
  CHECK(r.seminorm == doctest::Approx(1.0).epsilon(0.1));
  CHECK(r.seminorm <= 1.0 + 1e-12);   // |a|^b - |c|^b <= |a - c|^b
}

TEST_CASE("calibration: exponents of |x1|^beta on a 512-interval axis")
{
  for (double beta : {0.3, 0.6, 0.9}) {
    CAPTURE(beta);
    // singularity on the edge: every distance up to 2 sees its worst pair, so the fit is unbiased
    const auto u = sample_1d(513, -1, 1, 2, 0, 1, [beta](double x, double) { return std::pow(1.0 + x, beta); });
    // exhaustive: the default budget samples the far bins and may miss the one extreme pair
    const long all = 10000000;
    const auto r = estimate_parabolic_holder(u, unit_box, holder(0.5 * beta, all));
    CHECK_FALSE(r.components.front().sampled);
    CHECK(std::fabs(r.effective_exponent - beta) < 0.05);
    CHECK(r.seminorm == doctest::Approx(1.0).epsilon(1e-9));   // node at -1 gives equality
    // mismatched exponents e: the sup of d^{beta - e} sits at the largest (2) or smallest (h) distance
    CHECK(estimate_parabolic_holder(u, unit_box, holder(0.4 * beta, all)).seminorm
          == doctest::Approx(std::pow(2.0, 0.2 * beta)).epsilon(1e-9));
    if (0.6 * beta <= 0.5)
      CHECK(estimate_parabolic_holder(u, unit_box, holder(0.6 * beta, all)).seminorm
            == doctest::Approx(std::pow(2.0 / 512.0, -0.2 * beta)).epsilon(1e-9));
  }
}

TEST_CASE("witness ratios recompute from the grid")
{
  auto g = oracle::rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = oracle::uniform(g, 0.5, 3.0), b = oracle::uniform(g, -1, 1);
    const auto u = sample_1d(257, -1, 1, 17, 0, 1, [a, b](double x, double t) {
      return std::sin(a * x + b * t) + std::sqrt(std::fabs(x - 0.1));
    });
    for (double alpha : {0.2, 0.45, 0.7, 0.95}) {
      const auto r = estimate_parabolic_holder(u, unit_box, holder(alpha));
      for (const auto& c : r.components) {
        REQUIRE(c.witness.has_value());
        CHECK(oracle::rel(reevaluate_witness(u, c), c.seminorm) < 1e-12);
        CHECK(node_in_cylinder(unit_box, c.witness->x1, c.witness->t1));
        CHECK(node_in_cylinder(unit_box, c.witness->x2, c.witness->t2));
      }
    }
  }
}

TEST_CASE("property: seminorms do not grow when the cylinder shrinks")
{
  const auto u = sample_1d(129, -1, 1, 33, 0, 1, [](double x, double t) {
    return std::pow(std::fabs(x - 0.3), 0.7) + std::cos(3 * t) * x;
  });
  HolderSpec h = holder(0.35);
  h.min_bins = 4;
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {1.0, 0.75, 0.5, 0.25}) {
    const auto Q = ParabolicCylinder::box({0.0}, r, 0.5 - 0.5 * r, 0.5 + 0.5 * r);
    const double sn = estimate_parabolic_holder(u, Q, h).seminorm;
    CHECK(sn <= prev + 1e-12);
    prev = sn;
  }
}

TEST_CASE("holder cases (ii) and (iii) on a smooth caloric function")
{
  // e^{-t} sin x: gradient and second derivatives are Lipschitz, so all seminorms stay O(1)
  const auto u = sample_1d(129, -1, 1, 65, 0, 1, [](double x, double t) { return std::exp(-t) * std::sin(x); });
  const auto r2 = estimate_parabolic_holder(u, unit_box, holder(0.75));
  CHECK(r2.case_name == "holder(ii)");
  CHECK(r2.components.size() == 3);
  CHECK(r2.derivative_sup == doctest::Approx(1.0).epsilon(1e-4));   // max |cos x e^{-t}|
  CHECK(r2.seminorm < 5.0);
  const auto r3 = estimate_parabolic_holder(u, unit_box, holder(1.0));
  CHECK(r3.case_name == "holder(ii)");
  HolderSpec h3;
  h3.mode = HolderMode::Schauder;
  h3.s = 0.7;
  h3.alpha = 0.8;   // 2s + alpha = 2.2
  const auto r4 = estimate_parabolic_holder(u, unit_box, h3);
  CHECK(r4.case_name.rfind("holder(iii)", 0) == 0);
  CHECK(r4.seminorm < 10.0);
  h3.alpha = 0.9;
  h3.s = 0.99;   // 2.88 still below 3
  CHECK_NOTHROW(estimate_parabolic_holder(u, unit_box, h3));
  h3.s = 0.5;
  h3.alpha = 0.0;
  CHECK_THROWS_AS(estimate_parabolic_holder(u, unit_box, h3), ConfigError);
}

TEST_CASE("log-Lipschitz modulus: linear, x log x, and a power that diverges")
{
  auto semi = [](int nx, const std::function<double(double)>& g) {
    const auto u = sample_1d(nx, -1, 1, 2, 0, 1, [&](double x, double) { return g(x); });
    HolderSpec h;
    h.time_alpha = 0.5;
    return estimate_log_lipschitz(u, unit_box, h).components.front().seminorm;
  };
  auto lin = [](double x) { return x; };
  auto xlogx = [](double x) { return x == 0.0 ? 0.0 : x * std::log(std::fabs(x)); };
  auto root = [](double x) { return std::sqrt(std::fabs(x)); };

  // |x - y| / (|x - y| |log min(|x - y|, 1/2)|) <= 1/log 2
  for (int nx : {257, 1025, 4097})
    CHECK(semi(nx, lin) <= 1.0 / std::log(2.0) + 1e-12);

  const double a = semi(257, xlogx), b = semi(1025, xlogx), c = semi(4097, xlogx);
  CHECK(std::fabs(c / b - 1.0) < 0.1);
  CHECK(std::fabs(b / a - 1.0) < 0.2);

  const double p = semi(257, root), q = semi(1025, root), r = semi(4097, root);
  CHECK(q > 1.5 * p);
  CHECK(r > 1.5 * q);
}

TEST_CASE("time direction: |t|^{1/4} passes at 1/4 and diverges at 0.3")
{
  // joint distance uses |t - tau|^{1/2}, so alpha is the time exponent
  auto semi = [](int nt, double alpha) {
    const auto u = sample_1d(3, -1, 1, nt, 0, 1, [](double, double t) { return std::pow(std::fabs(t), 0.25); });
    HolderSpec h = holder(alpha);
    h.min_bins = 4;
    return estimate_parabolic_holder(u, unit_box, h).seminorm;
  };
  for (int nt : {65, 1025, 16385})
    CHECK(semi(nt, 0.25) == doctest::Approx(1.0).epsilon(1e-9));
  const double s1 = semi(65, 0.3), s2 = semi(1025, 0.3), s3 = semi(16385, 0.3);
  CHECK(s2 > s1);
  CHECK(s3 > s2);
  // the ratio grows like (dt)^{-0.05}
  CHECK(s3 / s1 == doctest::Approx(std::pow(256.0, 0.05)).epsilon(0.02));
}

TEST_CASE("under-resolved grids are rejected")
{
  const auto u = sample_1d(5, -1, 1, 3, 0, 1, [](double x, double) { return x; });
  CHECK_THROWS_AS(estimate_parabolic_holder(u, unit_box, holder(0.3)), ArgumentError);
}

TEST_CASE("homogeneous C2 estimate")
{
  // v = e^{-t} cos x on Qt = B_1 x (1,2) within Q = B_2 x (0,3)
  const auto v = sample_1d(161, -2, 2, 121, 0, 3, [](double x, double t) { return std::exp(-t) * std::cos(x); });
  const auto Qt = ParabolicCylinder::box({0.0}, 1.0, 1.0, 2.0);
  const auto Q = ParabolicCylinder::box({0.0}, 2.0, 0.0, 3.0);
  const auto r = homogeneous_estimate(v, Qt, Q);
  const double e1 = std::exp(-1.0);
  CHECK(r.sup_norm == doctest::Approx(e1).epsilon(1e-12));
  // sup|v_x| + sup|v_xx| + sup|v_t| = e^{-1}(sin 1 + 1 + 1)
  CHECK(r.derivative_sup == doctest::Approx(e1 * (std::sin(1.0) + 2.0)).epsilon(1e-4));
  CHECK(r.right_side == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.theorem_ratio == doctest::Approx(e1 * (std::sin(1.0) + 3.0)).epsilon(1e-4));
}

TEST_CASE("theorem check wiring")
{
  const auto Qt = ParabolicCylinder::box({0.0}, 1.0, 1.0, 2.0);
  const auto Q = ParabolicCylinder::box({0.0}, 2.0, 0.0, 3.0);
  const auto u = sample_1d(321, -2, 2, 97, 0, 3, [](double x, double t) { return std::sin(x) * t; });
  const auto f = sample_1d(321, -2, 2, 97, 0, 3, [](double x, double) { return 1.0 + 0.5 * x; });
  const auto r = check_estimate_theorem(u, f, 0.3, std::nullopt, TheoremKind::Holder, Qt, Q);
  CHECK(r.case_name.rfind("holder-estimate", 0) == 0);
  // sup |f| = 2 at x = 2, sup |u| = 3 at x = pi/2 (between nodes), t = 3
  CHECK(r.right_side == doctest::Approx(5.0).epsilon(1e-4));
  CHECK(r.theorem_ratio == doctest::Approx(r.norm / r.right_side).epsilon(1e-14));
  // at s = 1/2 the left side is log-Lipschitz
  const auto h = check_estimate_theorem(u, f, 0.5, std::nullopt, TheoremKind::Holder, Qt, Q);
  CHECK(h.case_name.find("log-lipschitz") != std::string::npos);
  // Schauder needs alpha, and gap >= 1 between the cylinders
  CHECK_THROWS_AS(check_estimate_theorem(u, f, 0.3, std::nullopt, TheoremKind::Schauder, Qt, Q), ArgumentError);
  const auto big = ParabolicCylinder::box({0.0}, 1.5, 1.0, 2.0);
  CHECK_THROWS_AS(check_estimate_theorem(u, f, 0.3, std::nullopt, TheoremKind::Holder, big, Q), ArgumentError);
  const auto s = check_estimate_theorem(u, f, 0.3, 0.4, TheoremKind::Schauder, Qt, Q);
  CHECK(s.case_name.rfind("schauder-estimate", 0) == 0);
  CHECK(std::isfinite(s.theorem_ratio));
}

TEST_CASE("report json carries the witness and bins")
{
  const auto u = sample_1d(257, -1, 1, 9, 0, 1, [](double x, double t) { return std::fabs(x) + t; });
  const auto r = estimate_parabolic_holder(u, unit_box, holder(0.5));
  const auto j = nlohmann::json::parse(report_json(r));
  CHECK(j["case"] == "holder(i)");
  CHECK(j.contains("components"));
  CHECK(j.dump().find("ratio") != std::string::npos);
  CHECK(holder_mode_from_string(to_string(HolderMode::OnePlusLog)) == HolderMode::OnePlusLog);
  CHECK_THROWS_AS(holder_mode_from_string("zygmund"), ConfigError);
}
