#include "doctest.h"
#include "oracles.h"

#include "fracheat/catalog.h"
#include "fracheat/config.h"
#include "fracheat/errors.h"
#include "fracheat/grid_field.h"
#include "fracheat/master_operator.h"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <string>

using namespace fracheat;
using nlohmann::json;

namespace {

  std::string config_error(const std::string& text)
  {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  }

  CatalogContext ctx(int n, double s)
  {
    return CatalogContext{FracParams::make(n, s), QuadratureSpec{}, {}};
  }

  std::filesystem::path scratch(const std::string& name)
  {
    auto p = std::filesystem::temp_directory_path() / ("fracheat_test_config_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
  }

}

TEST_CASE("minimal config takes the documented defaults")
{
  const auto c = parse_config(std::string(R"({"n": 1, "s": 0.5})"));
  CHECK(c.frac.n == 1);
  CHECK(c.frac.s == 0.5);
  CHECK(c.quad.r_cut == 1e-3);
  CHECK(c.quad.r_max == 1e4);
  CHECK(c.quad.panels_per_decade == 8);
  CHECK(c.quad.gh_order == 20);
  CHECK(c.quad.rel_tol == 1e-6);
  CHECK(c.seed == 0);
  CHECK(c.threads == 1);
  CHECK(c.output_dir == "fracheat_out");
  CHECK(c.fields.count("default") == 1);
  CHECK(c.fields.count("source") == 1);
  CHECK(c.fields.count("solution") == 1);
  // solve and reg cylinders default to B_2 x (0,3) and B_1 x (1,2)
  CHECK(c.solve.Q.radius == 2.0);
  CHECK(c.solve.Q.t_lo == 0.0);
  CHECK(c.solve.Q.t_hi == 3.0);
  CHECK(c.reg.Qt.radius == 1.0);
  CHECK(c.reg.Qt.t_lo == 1.0);
  // default p sits inside (1, (n+2)/(n+2-2s)) = (1, 1.5)
  CHECK(c.rescale.prob.p == doctest::Approx(1.25));
  CHECK(c.selftest.criteria.size() == 8);

  const auto empty = parse_config(std::string("{}"));
  CHECK(empty.frac.n == 1);
  CHECK(empty.frac.s == 0.5);
  CHECK(default_config_json()["quadrature"]["gh_order"] == 20);
  CHECK(parse_config(default_config_json()).quad.r_max == 1e4);
}

TEST_CASE("defaults are valid in every dimension and order")
{
  for (int n = 1; n <= 3; ++n)
    for (double s : {0.1, 0.5, 0.9}) {
      CAPTURE(n);
      CAPTURE(s);
      json j{{"n", n}, {"s", s}};
      CHECK_NOTHROW(parse_config(j));
    }
}

TEST_CASE("out-of-range values are rejected with the key path")
{
  auto e = config_error(R"({"s": 1.5})");
  CHECK(e.find("(0, 1)") != std::string::npos);
  CHECK(e.find("config.s") != std::string::npos);
  CHECK(config_error(R"({"s": 0})").find("config.s") != std::string::npos);
  CHECK(config_error(R"({"n": 0})").find("config.n") != std::string::npos);
  CHECK(config_error(R"({"quadrature": {"r_cut": -1}})").find("config.quadrature.r_cut") != std::string::npos);
  CHECK(config_error(R"({"quadrature": {"gh_ordr": 30}})").find("config.quadrature.gh_ordr") != std::string::npos);
  CHECK(config_error(R"({"bogus": 1})").find("config.bogus") != std::string::npos);
  CHECK(config_error(R"({"fields": {"a": {"type": "cos", "omega": 2}}})").find("config.fields.a.omega")
        != std::string::npos);
  CHECK(config_error(R"({"op": {"points": [[0.0]]}})").find("config.op.points") != std::string::npos);
  CHECK(config_error(R"({"op": {"field": "nope"}})").find("config.op.field") != std::string::npos);
  CHECK(config_error(R"({"reg": {"mode": "zygmund"}})").find("config.reg.mode") != std::string::npos);
  CHECK(config_error(R"({"selftest": {"criteria": [9]}})").find("config.selftest.criteria") != std::string::npos);
  CHECK(config_error(R"({"n": "two"})").find("config.n") != std::string::npos);
  CHECK_THROWS_AS(parse_config(std::string("{not json")), ConfigError);
}

TEST_CASE("rescale regime is enforced at parse time")
{
  const auto e = config_error(R"({"n": 2, "s": 0.75, "rescale": {"p": 3}})");
  CHECK(e.find("config.rescale") != std::string::npos);
  CHECK(e.find("1.6") != std::string::npos);
  CHECK_NOTHROW(parse_config(std::string(R"({"n": 2, "s": 0.75, "rescale": {"p": 3, "regime": "none"}})")));
  CHECK(config_error(R"({"s": 0.4, "rescale": {"variant": "height-plus-gradient", "q": 0.1}})").find("s > 1/2")
        != std::string::npos);
}

TEST_CASE("grid fields: missing files are config errors, present ones load")
{
  CHECK(config_error(R"({"fields": {"g": {"type": "grid", "path": "no/such/grid.json"}}})").find("not found")
        != std::string::npos);

  const auto dir = scratch("grid");
  GridField g = GridField::make("g", {Axis{-1, 1, 5}}, Axis{0, 1, 3});
  for (std::size_t i = 0; i < g.values.size(); ++i)
    g.values[i] = 0.1 * static_cast<double>(i);
  save_grid(g, (dir / "g.json").string());
  const auto c = parse_config(std::string(R"({"fields": {"g": {"type": "grid", "path": "g.json"}}})"), dir.string());
  const auto f = build_field(c.fields.at("g"), CatalogContext{c.frac, c.quad, dir.string()});
  std::vector<double> x{-1.0};
  CHECK(f.field.eval(x, 0.0) == 0.0);
  x[0] = 1.0;
  CHECK(f.field.eval(x, 1.0) == doctest::Approx(1.4));
  // dimension mismatch
  CHECK(config_error(std::string(R"({"n": 2, "fields": {"g": {"type": "grid", "path": ")") + (dir / "g.json").string()
                     + "\"}}}")
            .find("n = 1") != std::string::npos);
}

TEST_CASE("grid files round-trip exactly")
{
  const auto dir = scratch("roundtrip");
  GridField g = GridField::make("rt", {Axis{-1, 1, 4}, Axis{0, 2, 3}}, Axis{0, 1, 2});
  auto rng = oracle::rng(5);
  for (auto& v : g.values)
    v = oracle::uniform(rng, -1e3, 1e3) / 3.0;
  const auto path = (dir / "rt.json").string();
  save_grid(g, path);
  const auto h = load_grid(path);
  CHECK(h.axes == g.axes);
  CHECK(h.time_axis == g.time_axis);
  CHECK(h.values == g.values);
  CHECK(csv_path_for(path) == (dir / "rt.csv").string());
  CHECK_THROWS_AS(load_grid((dir / "missing.json").string()), IoError);
}

TEST_CASE("every catalog type builds; unknown types are rejected")
{
  const auto c = ctx(1, 0.5);
  for (const auto& ty : catalog_types()) {
    if (ty == "grid")
      continue;
    CAPTURE(ty);
    json spec{{"type", ty}};
    if (ty == "manufactured") {
      // without a support the convolution of a positive source diverges
      spec["source"] = json{{"type", "smooth_random"}};
      spec["support"] = json{{"center", {0.0}}, {"radius", 2.0}, {"t_lo", 0.0}, {"t_hi", 3.0}};
    }
    const auto f = build_field(spec, c);
    std::vector<double> x{0.3};
    CHECK(std::isfinite(f.field.eval(x, 0.7)));
  }
  CHECK_THROWS_AS(build_field(json{{"type", "manufactured"}, {"source", {{"type", "constant"}}}}, c).field.eval(
                      std::vector<double>{0.0}, 1.0),
                  DivergenceError);
  try {
    build_field(json{{"type", "wavelet"}}, c, "fields.w");
    FAIL("accepted an unknown type");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("fields.w.type") != std::string::npos);
    CHECK(std::string(e.what()).find("exp_cos") != std::string::npos);
  }
}

TEST_CASE("power field: exact heat flow against a 1D Simpson mean")
{
  for (double beta : {0.3, 0.9, 1.7}) {
    const auto f = build_field(json{{"type", "power"}, {"beta", beta}, {"center", {0.2}}}, ctx(1, 0.5));
    REQUIRE(f.field.heat_flow);
    for (double x0 : {0.2, 0.0, 1.5})
      for (double a : {1e-3, 0.3, 10.0}) {
        CAPTURE(beta);
        CAPTURE(x0);
        CAPTURE(a);
        const double sa = 2.0 * std::sqrt(a);
        // split at the cusp z_c and substitute z = z_c +- v^4 so the integrand is smooth
        const double zc = (x0 - 0.2) / sa;
        double want = 0.0;
        for (double side : {-1.0, 1.0}) {
          const double top = std::pow(9.0 + std::fabs(zc), 0.25);
          want += oracle::simpson(
              [&](double v) {
                const double z = zc + side * v * v * v * v;
                return std::exp(-z * z) * std::pow(sa * v * v * v * v, beta) * 4.0 * v * v * v;
              },
              0.0, top, 4000);
        }
        want /= std::sqrt(oracle::pi);
        std::vector<double> x{x0};
        CHECK(oracle::rel(f.field.heat_flow(x, 0.0, a), want) < 1e-6);
      }
  }
  // n = 2 against a polar oracle at the centre: E|2 sqrt(a) Z|^beta = (4a)^{beta/2} Gamma(1 + beta/2)
  const auto f2 = build_field(json{{"type", "power"}, {"beta", 0.5}}, ctx(2, 0.5));
  std::vector<double> z{0.0, 0.0};
  CHECK(oracle::rel(f2.field.heat_flow(z, 0.0, 0.7), std::pow(2.8, 0.25) * oracle::gamma(1.25)) < 1e-10);
}

TEST_CASE("catalog closed forms agree with the field values")
{
  const auto c = ctx(1, 0.5);
  const auto f = build_field(json{{"type", "exp_cos"}, {"k", {2.0}}, {"lambda", 0.5}}, c);
  REQUIRE(f.exact_master);
  std::vector<double> x{0.4};
  // symbol (lambda + |k|^2 ... ) as a complex power: (0.5 + 4)^{1/2} times the field
  CHECK(oracle::rel(f.exact_master(x, 0.3), std::sqrt(4.5) * f.field.eval(x, 0.3)) < 1e-12);
  const auto r = apply_master(c.frac, f.field, x, 0.3, c.quad);
  CHECK(oracle::rel(r.value, f.exact_master(x, 0.3)) < 1e-5);
}
