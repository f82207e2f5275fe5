#include "fracheat/catalog.h"
#include "fracheat/errors.h"
#include "fracheat/greens.h"
#include "fracheat/grid_field.h"

#include "json_reader.h"

#include <boost/math/special_functions/hypergeometric_1F1.hpp>

#include <cmath>
#include <complex>
#include <filesystem>
#include <random>

namespace fracheat {

  using nlohmann::json;
  using detail::ObjReader;

  std::vector<std::string> catalog_types()
  {
    return {"constant", "affine", "cos", "exp_cos", "power", "time_power", "exp_time",
            "gaussian_bump", "fundamental", "smooth_random", "manufactured", "grid"};
  }

  ParabolicCylinder parse_cylinder(const json& j, int n, const std::string& path)
  {
    ObjReader r(j, path);
    auto c = r.vec("center", n);
    ParabolicCylinder Q;
    if (r.has("t_lo") || r.has("t_hi")) {
      const double rad = r.num_in("radius", 1.0, 0.0, INFINITY, true, true);
      const double lo = r.num("t_lo"), hi = r.num("t_hi");
      if (!(hi > lo))
        throw ConfigError(path + ": t_hi must exceed t_lo");
      Q = ParabolicCylinder::box(c, rad, lo, hi);
    } else {
      const double rad = r.num_in("radius", 1.0, 0.0, INFINITY, true, true);
      Q = ParabolicCylinder::parabolic(c, r.num("center_t", 0.0), rad);
    }
    r.finish();
    return Q;
  }

  namespace {

    struct Mode {
      std::vector<double> k;
      double omega = 0.0, phase = 0.0, a = 0.0, k2 = 0.0;
    };

    std::vector<Mode> random_modes(int n, unsigned long long seed, int terms, double amplitude, double kmax,
                                   double omega_max)
    {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> U(-1.0, 1.0);
      std::vector<Mode> modes;
      for (int m = 0; m < terms; ++m) {
        Mode md;
        for (int i = 0; i < n; ++i) {
          md.k.push_back(kmax * U(rng));
          md.k2 += md.k.back() * md.k.back();
        }
        md.omega = omega_max * U(rng);
        md.phase = 3.0 * U(rng);
        md.a = amplitude * U(rng);
        modes.push_back(md);
      }
      return modes;
    }

  }

  FieldHandle smooth_random_source(int n, unsigned long long seed, int terms, double base, double amplitude,
                                   double kmax, double omega_max)
  {
    const auto modes = random_modes(n, seed, terms, amplitude, kmax, omega_max);
    const auto phase = [](const Mode& m, std::span<const double> y, double t) {
      double ph = m.omega * t + m.phase;
      for (std::size_t i = 0; i < y.size(); ++i)
        ph += m.k[i] * y[i];
      return ph;
    };
    FieldHandle f = make_field(
        n,
        [modes, base, phase](std::span<const double> y, double t) {
          double v = base;
          for (const auto& m : modes)
            v += m.a * std::cos(phase(m, y, t));
          return v;
        },
        Growth::bounded(), "smooth_random");
    f.heat_flow = [modes, base, phase](std::span<const double> y, double tau, double a) {
      double v = base;
      for (const auto& m : modes)
        v += m.a * std::exp(-m.k2 * a) * std::cos(phase(m, y, tau));
      return v;
    };
    return f;
  }

  FieldHandle fundamental_snapshot(const FracParams& p, std::span<const double> x0_, double t0)
  {
    std::vector<double> x0(x0_.begin(), x0_.end());
    if (static_cast<int>(x0.size()) != p.n)
      throw ArgumentError("fundamental: centre has the wrong dimension");
    const double gc = green_constant(p.n, p.s);
    const int n = p.n;
    const double s = p.s;
    FieldHandle G = make_field(
        n,
        [p, x0, t0](std::span<const double> x, double t) {
          std::vector<double> d(x0.size());
          for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = x[i] - x0[i];
          return eval_green(p, d, t - t0);
        },
        Growth::bounded(), "fundamental");
    G.time_floor = t0;
    G.heat_flow = [gc, x0, t0, n, s](std::span<const double> x, double tau, double a) {
      const double T = tau - t0;
      if (!(T > 0.0))
        return 0.0;
      double r2 = 0.0;
      for (int i = 0; i < n; ++i)
        r2 += (x[i] - x0[i]) * (x[i] - x0[i]);
      return gc * std::pow(T, s - 1.0) * std::pow(T + a, -0.5 * n) * std::exp(-r2 / (4.0 * (T + a)));
    };
    G.localize = [x0, t0](double tau) -> std::optional<Localization> {
      if (tau <= t0)
        return std::nullopt;
      return Localization{x0, tau - t0};
    };
    return G;
  }

  namespace {

    double dot(std::span<const double> a, std::span<const double> b)
    {
      double d = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i)
        d += a[i] * b[i];
      return d;
    }

    double dist2(std::span<const double> a, std::span<const double> b)
    {
      double d = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i)
        d += (a[i] - b[i]) * (a[i] - b[i]);
      return d;
    }

    // (-Delta)^s |x|^beta = C |x|^{beta - 2s}, 0 < beta < 2s
    double power_constant(int n, double s, double beta)
    {
      return std::pow(2.0, 2.0 * s) * std::tgamma(0.5 * (n + beta)) * std::tgamma(s - 0.5 * beta)
             / (std::tgamma(-0.5 * beta) * std::tgamma(0.5 * (n + beta) - s));
    }

    // E|mu + sqrt(2a) N|^beta, N standard normal in R^n, |mu|^2 = d2
    double power_mean(int n, double beta, double d2, double a)
    {
      const double z = d2 / (4.0 * a);
      const double lg = std::lgamma(0.5 * (n + beta)) - std::lgamma(0.5 * n);
      return std::pow(4.0 * a, 0.5 * beta) * std::exp(lg)
             * boost::math::hypergeometric_1F1(-0.5 * beta, 0.5 * n, -z);
    }

  }

  CatalogField build_field(const json& spec, const CatalogContext& ctx, const std::string& path)
  {
    ObjReader r(spec, path);
    const int n = ctx.frac.n;
    const double s = ctx.frac.s;
    CatalogField out;
    out.type = r.str("type");
    out.name = out.type;
    const auto& ty = out.type;

    if (ty == "constant") {
      const double c = r.num("value", 1.0);
      out.field = make_field(n, [c](std::span<const double>, double) { return c; }, Growth::bounded(), ty);
      out.field.heat_flow = [c](std::span<const double>, double, double) { return c; };
      out.exact_master = [](std::span<const double>, double) { return 0.0; };
    } else if (ty == "affine") {
      const auto a = r.vec("a", n, std::vector<double>(n, 1.0));
      const double b = r.num("b", 0.0);
      const auto f = [a, b](std::span<const double> x, double) { return dot(a, x) + b; };
      out.field = make_field(n, f, Growth::affine(), ty);
      out.field.heat_flow = [f](std::span<const double> x, double t, double) { return f(x, t); };
      out.exact_master = [](std::span<const double>, double) { return 0.0; };
    } else if (ty == "cos" || ty == "exp_cos") {
      const auto k = r.vec_or_scalar("k", n, std::vector<double>(n, 1.0));
      const double phase = r.num("phase", 0.0);
      const double lam = ty == "exp_cos" ? r.num("lambda", 1.0) : 0.0;
      const double k2 = dot(k, k);
      const auto f = [k, phase, lam](std::span<const double> x, double t) {
        return std::exp(lam * t) * std::cos(dot(k, x) + phase);
      };
      out.field = make_field(n, f, lam != 0.0 ? Growth::exponential_in_time(lam) : Growth::bounded(), ty);
      out.field.heat_flow = [f, k2](std::span<const double> x, double t, double a) { return std::exp(-k2 * a) * f(x, t); };
      if (lam >= 0.0 && lam + k2 > 0.0) {
        const double sym = std::pow(lam + k2, s);
        out.exact_master = [f, sym](std::span<const double> x, double t) { return sym * f(x, t); };
      }
    } else if (ty == "power") {
      const double beta = r.num_in("beta", 0.5, 0.0, INFINITY, true, true);
      const auto c = r.vec("center", n, std::vector<double>(n, 0.0));
      out.field = lift_time_independent(
          n, [c, beta](std::span<const double> x) { return std::pow(std::sqrt(dist2(x, c)), beta); },
          Growth::polynomial(beta), ty);
      out.field.heat_flow = [c, beta, n](std::span<const double> x, double, double a) {
        const double d2 = dist2(x, c);
        return a > 0.0 ? power_mean(n, beta, d2, a) : std::pow(std::sqrt(d2), beta);
      };
      if (beta < 2.0 * s) {
        const double C = power_constant(n, s, beta);
        out.exact_master = [c, beta, s, C](std::span<const double> x, double) {
          return C * std::pow(std::sqrt(dist2(x, c)), beta - 2.0 * s);
        };
      }
    } else if (ty == "time_power") {
      const double beta = r.num_in("beta", 1.0, 0.0, INFINITY, true, true);
      const double t0 = r.num("t0", 0.0);
      out.field = lift_space_independent(
          n, [beta, t0](double t) { return t > t0 ? std::pow(t - t0, beta) : 0.0; }, Growth::bounded(), ty);
      out.field.time_floor = t0;
      const double C = std::tgamma(beta + 1.0) / std::tgamma(beta + 1.0 - s);
      out.exact_master = [C, beta, s, t0](std::span<const double>, double t) {
        return t > t0 ? C * std::pow(t - t0, beta - s) : 0.0;
      };
    } else if (ty == "exp_time") {
      const double lam = r.num("lambda", 1.0);
      out.field = lift_space_independent(n, [lam](double t) { return std::exp(lam * t); },
                                         Growth::exponential_in_time(lam), ty);
      if (lam > 0.0)
        out.exact_master = [lam, s](std::span<const double>, double t) { return std::pow(lam, s) * std::exp(lam * t); };
    } else if (ty == "gaussian_bump") {
      const double A = r.num("amplitude", 1.0);
      const auto c = r.vec("center", n, std::vector<double>(n, 0.0));
      const double tc = r.num("center_t", 0.0);
      const double w = r.num_in("width", 1.0, 0.0, INFINITY, true, true);
      const double sig = r.num_in("time_width", 1.0, 0.0, INFINITY, true, true);
      out.field = make_field(
          n,
          [A, c, tc, w, sig](std::span<const double> x, double t) {
            return A * std::exp(-dist2(x, c) / (w * w) - (t - tc) * (t - tc) / (sig * sig));
          },
          Growth::bounded(), ty);
      out.field.heat_flow = [A, c, tc, w, sig, n](std::span<const double> x, double t, double a) {
        const double w2 = w * w + 4.0 * a;
        return A * std::pow(w * w / w2, 0.5 * n) * std::exp(-dist2(x, c) / w2 - (t - tc) * (t - tc) / (sig * sig));
      };
    } else if (ty == "fundamental") {
      const auto c = r.vec("center", n, std::vector<double>(n, 0.0));
      const double t0 = r.num("t0", 0.0);
      out.field = fundamental_snapshot(ctx.frac, c, t0);
      out.exact_master = [t0](std::span<const double>, double t) {
        return t != t0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
      };
    } else if (ty == "smooth_random") {
      const long long seed = r.integer("seed", 0);
      const int terms = static_cast<int>(r.int_min("terms", 3, 1));
      const double base = r.num("base", 1.5);
      const double amp = r.num("amplitude", 0.3);
      const double kmax = r.num_in("kmax", 1.2, 0.0, INFINITY, false, true);
      const double om = r.num_in("omega_max", 1.5, 0.0, INFINITY, false, true);
      out.field = smooth_random_source(n, static_cast<unsigned long long>(seed), terms, base, amp, kmax, om);
      // mode by mode: (d_t - Delta)^s e^{i(k.y + omega t)} = (i omega + |k|^2)^s e^{i(...)}; the constant drops
      std::vector<std::pair<Mode, std::complex<double>>> modes;
      for (const auto& m : random_modes(n, static_cast<unsigned long long>(seed), terms, amp, kmax, om))
        modes.emplace_back(m, std::pow(std::complex<double>(m.k2, m.omega), s));
      out.exact_master = [modes](std::span<const double> y, double t) {
        double v = 0.0;
        for (const auto& [m, sym] : modes) {
          const double ph = m.omega * t + m.phase + dot(m.k, y);
          v += m.a * (sym * std::complex<double>(std::cos(ph), std::sin(ph))).real();
        }
        return v;
      };
    } else if (ty == "manufactured") {
      const auto src = build_field(r.raw("source"), ctx, r.sub("source"));
      if (r.has("support")) {
        RestrictedSource rs;
        rs.base = src.field;
        rs.cylinder = parse_cylinder(r.raw("support"), n, r.sub("support"));
        const auto mode = r.str("mode", "inside");
        if (mode == "inside")
          rs.mode = RestrictMode::Inside;
        else if (mode == "outside")
          rs.mode = RestrictMode::Outside;
        else
          throw ConfigError(r.sub("mode") + ": expected inside or outside");
        out.field = green_field(ctx.frac, rs, ctx.quad);
        out.exact_master = [rs](std::span<const double> x, double t) { return rs(x, t); };
      } else {
        out.field = green_field(ctx.frac, src.field, ctx.quad);
        out.exact_master = src.field.eval;
      }
      out.field.name = "manufactured";
    } else if (ty == "grid") {
      std::filesystem::path gp = r.str("path");
      if (gp.is_relative() && !ctx.base_dir.empty())
        gp = std::filesystem::path(ctx.base_dir) / gp;
      if (!std::filesystem::exists(gp))
        throw ConfigError(r.sub("path") + ": file not found: " + gp.string());
      auto g = std::make_shared<GridField>(load_grid(gp.string()));
      if (g->n() != n)
        throw ConfigError(r.sub("path") + ": grid has n = " + std::to_string(g->n()) + ", config n = " + std::to_string(n));
      out.field = grid_as_field(g);
    } else {
      std::string known;
      for (const auto& t : catalog_types())
        known += (known.empty() ? "" : ", ") + t;
      throw ConfigError(r.sub("type") + ": unknown field type '" + ty + "' (" + known + ")");
    }
    r.finish();
    if (out.field.name.empty())
      out.field.name = ty;
    return out;
  }

}
