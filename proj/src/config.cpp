#include "fracheat/config.h"
#include "fracheat/acceptance.h"
#include "fracheat/catalog.h"
#include "fracheat/errors.h"

#include "json_reader.h"

#include <cmath>

namespace fracheat {

  using nlohmann::json;
  using detail::ObjReader;

  namespace {

    std::vector<SpaceTimePoint> read_points(ObjReader& r, const std::string& key, int n)
    {
      std::vector<SpaceTimePoint> out;
      if (!r.has(key))
        return out;
      const auto& arr = r.raw(key);
      if (!arr.is_array())
        throw ConfigError(r.sub(key) + ": expected an array of [x1, ..., xn, t] arrays");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = r.sub(key) + "[" + std::to_string(i) + "]";
        if (!arr[i].is_array() || arr[i].size() != static_cast<std::size_t>(n + 1))
          throw ConfigError(p + ": expected " + std::to_string(n + 1) + " numbers (x1, ..., xn, t)");
        SpaceTimePoint pt;
        for (int a = 0; a <= n; ++a) {
          if (!arr[i][a].is_number())
            throw ConfigError(p + ": expected numbers");
          const double v = arr[i][a].get<double>();
          if (a < n)
            pt.x.push_back(v);
          else
            pt.t = v;
        }
        out.push_back(pt);
      }
      return out;
    }

    ParabolicCylinder cyl_or(ObjReader& r, const std::string& key, int n, ParabolicCylinder dflt)
    {
      return r.has(key) ? parse_cylinder(r.raw(key), n, r.sub(key)) : dflt;
    }

    int steps(ObjReader& r, const std::string& key, int dflt)
    {
      const long long v = r.int_min(key, dflt, 3);
      if (v > 100001)
        throw ConfigError(r.sub(key) + ": at most 100001 steps");
      return static_cast<int>(v);
    }

    json default_fields(int n)
    {
      json center = std::vector<double>(n, 0.0);
      return json{
          {"default", json{{"type", "exp_cos"}, {"lambda", 1.0}, {"k", std::vector<double>(n, 1.0 / std::sqrt(n))}}},
          {"source", json{{"type", "smooth_random"}, {"seed", 0}}},
          {"solution",
           json{{"type", "manufactured"},
                {"source", json{{"type", "smooth_random"}, {"seed", 0}}},
                {"support", json{{"center", center}, {"radius", 3.0}, {"t_lo", -1.0}, {"t_hi", 3.5}}}}}};
    }

    void check_field(const RunConfig& c, const std::string& name, const std::string& path)
    {
      if (!c.fields.count(name))
        throw ConfigError(path + ": no field named '" + name + "'");
    }

  }

  json default_config_json()
  {
    return json{{"n", 1}, {"s", 0.5}, {"seed", 0}, {"threads", 1}, {"output_dir", "fracheat_out"},
                {"quadrature", json{{"r_cut", 1e-3}, {"r_max", 1e4}, {"panels_per_decade", 8}, {"gh_order", 20},
                                    {"rel_tol", 1e-6}}},
                {"fields", default_fields(1)}};
  }

  RunConfig parse_config(const std::string& text, const std::string& base_dir)
  {
    json doc;
    try {
      doc = json::parse(text.empty() ? std::string("{}") : text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    return parse_config(doc, base_dir);
  }

  RunConfig parse_config(const json& doc, const std::string& base_dir)
  {
    ObjReader r(doc, "config");
    RunConfig c;
    c.base_dir = base_dir;
    const int n = static_cast<int>(r.int_min("n", 1, 1));
    if (n > 6)
      throw ConfigError("config.n: " + std::to_string(n) + " outside [1, 6]");
    const double s = r.num_in("s", 0.5, 0.0, 1.0, true, true);
    c.frac = FracParams::make(n, s);
    c.seed = r.integer("seed", 0);
    c.threads = static_cast<int>(r.int_min("threads", 1, 1));
    c.output_dir = r.str("output_dir", c.output_dir);

    if (r.has("quadrature")) {
      ObjReader q(r.raw("quadrature"), r.sub("quadrature"));
      auto& Q = c.quad;
      Q.r_cut = q.num_in("r_cut", Q.r_cut, 0.0, 1.0, true, true);
      Q.r_max = q.num_in("r_max", Q.r_max, 1.0, 1e12, true, false);
      Q.panels_per_decade = static_cast<int>(q.int_min("panels_per_decade", Q.panels_per_decade, 1));
      Q.gh_order = static_cast<int>(q.int_min("gh_order", Q.gh_order, 2));
      Q.rel_tol = q.num_in("rel_tol", Q.rel_tol, 0.0, 1.0, true, true);
      Q.self_convergence = q.boolean("self_convergence", Q.self_convergence);
      Q.use_heat_flow = q.boolean("use_heat_flow", Q.use_heat_flow);
      Q.gh_cap_1d = static_cast<int>(q.int_min("gh_cap_1d", Q.gh_cap_1d, 2));
      Q.conv_angles = static_cast<int>(q.int_min("conv_angles", Q.conv_angles, 4));
      Q.conv_panels_per_decade = static_cast<int>(q.int_min("conv_panels_per_decade", Q.conv_panels_per_decade, 1));
      q.finish();
    }
    c.quad.seed = c.seed;
    try {
      c.quad.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("config.quadrature: ") + e.what());
    }

    // catalog: defaults, overridden or extended by name
    json fields = default_fields(n);
    if (r.has("fields")) {
      const auto& f = r.raw("fields");
      if (!f.is_object())
        throw ConfigError("config.fields: expected an object of name -> field spec");
      for (auto it = f.begin(); it != f.end(); ++it)
        fields[it.key()] = it.value();
    }
    const CatalogContext ctx{c.frac, c.quad, base_dir};
    for (auto it = fields.begin(); it != fields.end(); ++it) {
      build_field(it.value(), ctx, "config.fields." + it.key());   // validation only
      c.fields[it.key()] = it.value();
    }

    const std::vector<double> zero(n, 0.0);
    const auto Qdef = ParabolicCylinder::box(zero, 2.0, 0.0, 3.0);
    const auto Qtdef = ParabolicCylinder::box(zero, 1.0, 1.0, 2.0);
    c.solve.Q = Qdef;
    c.decompose.Q = Qdef;
    c.reg.Q = Qdef;
    c.reg.Qt = Qtdef;
    c.rescale.X = SpaceTimePoint{zero, 1.0};

    if (r.has("kernel")) {
      ObjReader k(r.raw("kernel"), r.sub("kernel"));
      c.kernel.samples = static_cast<long>(k.int_min("samples", c.kernel.samples, 1));
      c.kernel.slack = k.num_in("slack", c.kernel.slack, 0.0, 1.0, false, true);
      c.kernel.points = read_points(k, "points", n);
      k.finish();
    }
    if (c.kernel.points.empty())
      c.kernel.points = {SpaceTimePoint{zero, 1.0}, SpaceTimePoint{std::vector<double>(n, 1.0), 0.5}};

    if (r.has("op")) {
      ObjReader o(r.raw("op"), r.sub("op"));
      c.op.field = o.str("field", c.op.field);
      c.op.points = read_points(o, "points", n);
      o.finish();
    }
    check_field(c, c.op.field, "config.op.field");
    if (c.op.points.empty())
      c.op.points = {SpaceTimePoint{zero, 0.0}};

    if (r.has("solve")) {
      ObjReader o(r.raw("solve"), r.sub("solve"));
      c.solve.field = o.str("field", c.solve.field);
      c.solve.Q = cyl_or(o, "cylinder", n, c.solve.Q);
      c.solve.steps_x = steps(o, "steps_x", c.solve.steps_x);
      c.solve.steps_t = steps(o, "steps_t", c.solve.steps_t);
      c.solve.points = read_points(o, "points", n);
      o.finish();
    }
    check_field(c, c.solve.field, "config.solve.field");

    if (r.has("decompose")) {
      ObjReader o(r.raw("decompose"), r.sub("decompose"));
      c.decompose.u = o.str("u", c.decompose.u);
      c.decompose.f = o.str("f", c.decompose.f);
      c.decompose.Q = cyl_or(o, "cylinder", n, c.decompose.Q);
      c.decompose.steps_x = steps(o, "steps_x", c.decompose.steps_x);
      c.decompose.steps_t = steps(o, "steps_t", c.decompose.steps_t);
      c.decompose.spot_checks = static_cast<int>(o.int_min("spot_checks", c.decompose.spot_checks, 0));
      c.decompose.spot_tol = o.num_in("spot_tol", c.decompose.spot_tol, 0.0, INFINITY, true, true);
      o.finish();
    }
    check_field(c, c.decompose.u, "config.decompose.u");
    check_field(c, c.decompose.f, "config.decompose.f");

    {
      c.reg.holder.s = s;
      c.reg.holder.seed = c.seed;
      if (r.has("reg")) {
        ObjReader o(r.raw("reg"), r.sub("reg"));
        c.reg.field = o.str("field", c.reg.field);
        c.reg.source = o.str("source", c.reg.source);
        auto& h = c.reg.holder;
        if (o.has("mode")) {
          try {
            h.mode = holder_mode_from_string(o.str("mode"));
          } catch (const Error& e) {
            throw ConfigError(o.sub("mode") + ": " + e.what());
          }
        }
        h.alpha = o.num("alpha", h.alpha);
        h.pair_budget = static_cast<long>(o.integer("pair_budget", h.pair_budget));
        h.min_sep = o.num("min_sep", h.min_sep);
        h.time_alpha = o.num("time_alpha", h.time_alpha);
        h.min_bins = static_cast<int>(o.integer("min_bins", h.min_bins));
        c.reg.Q = cyl_or(o, "cylinder", n, c.reg.Q);
        c.reg.Qt = cyl_or(o, "inner_cylinder", n, c.reg.Qt);
        c.reg.steps_x = steps(o, "steps_x", c.reg.steps_x);
        c.reg.steps_t = steps(o, "steps_t", c.reg.steps_t);
        c.reg.outer_steps_x = steps(o, "outer_steps_x", c.reg.outer_steps_x);
        c.reg.outer_steps_t = steps(o, "outer_steps_t", c.reg.outer_steps_t);
        c.reg.theorem = o.str("theorem", c.reg.theorem);
        if (c.reg.theorem != "holder" && c.reg.theorem != "schauder")
          throw ConfigError(o.sub("theorem") + ": expected holder or schauder");
        if (o.has("source_alpha"))
          c.reg.alpha = o.num_in("source_alpha", 0.5, 0.0, 1.0, true, true);
        o.finish();
      }
      try {
        c.reg.holder.validate();
      } catch (const Error& e) {
        throw ConfigError(std::string("config.reg: ") + e.what());
      }
      check_field(c, c.reg.field, "config.reg.field");
      check_field(c, c.reg.source, "config.reg.source");
    }

    {
      auto& b = c.rescale;
      b.prob.n = n;
      b.prob.s = s;
      b.prob.p = 0.5 * (1.0 + (n + 2.0) / (n + 2.0 - 2.0 * s));   // middle of the admissible range
      if (r.has("rescale")) {
        ObjReader o(r.raw("rescale"), r.sub("rescale"));
        b.prob.p = o.num("p", b.prob.p);
        b.prob.q = o.num("q", b.prob.q);
        b.prob.C0 = o.num("C0", b.prob.C0);
        b.prob.Kbar = o.num("Kbar", b.prob.Kbar);
        const auto v = o.str("variant", "height");
        if (v == "height")
          b.variant = BlowupVariant::Height;
        else if (v == "height-plus-gradient")
          b.variant = BlowupVariant::HeightPlusGradient;
        else
          throw ConfigError(o.sub("variant") + ": expected height or height-plus-gradient");
        b.regime = o.str("regime", b.variant == BlowupVariant::Height ? "height" : "gradient");
        b.R = o.num_in("R", b.R, 0.0, INFINITY, true, true);
        if (o.has("X")) {
          const auto xv = o.vec("X", n + 1);
          b.X = SpaceTimePoint{std::vector<double>(xv.begin(), xv.end() - 1), xv.back()};
        }
        b.field = o.str("field", b.field);
        if (o.has("heights")) {
          b.heights = o.vec("heights", 0);
          for (double h : b.heights)
            if (!(h > 0.0))
              throw ConfigError(o.sub("heights") + ": heights must be positive");
          if (b.heights.empty())
            throw ConfigError(o.sub("heights") + ": at least one height");
        }
        b.spike = o.boolean("spike", b.spike);
        b.grid_steps = steps(o, "grid_steps", b.grid_steps);
        b.steps_x = steps(o, "steps_x", b.steps_x);
        b.steps_t = steps(o, "steps_t", b.steps_t);
        o.finish();
      }
      try {
        if (b.regime == "height")
          b.prob.validate_height_regime();
        else if (b.regime == "gradient")
          b.prob.validate_gradient_regime();
        else if (b.regime == "none")
          b.prob.validate();
        else
          throw ConfigError("expected regime height, gradient or none");
      } catch (const Error& e) {
        throw ConfigError(std::string("config.rescale: ") + e.what());
      }
      if (b.field != "synthetic") {
        check_field(c, b.field, "config.rescale.field");
        if (c.fields.at(b.field).value("type", "") != "grid")
          throw ConfigError("config.rescale.field: must name a grid field or be \"synthetic\"");
      }
    }

    if (r.has("selftest")) {
      ObjReader o(r.raw("selftest"), r.sub("selftest"));
      if (o.has("criteria")) {
        const auto v = o.vec("criteria", 0);
        c.selftest.criteria.clear();
        for (double d : v) {
          if (d != std::floor(d) || d < 1 || d > kCriteriaCount)
            throw ConfigError(o.sub("criteria") + ": entries must be integers in [1, " + std::to_string(kCriteriaCount) + "]");
          c.selftest.criteria.push_back(static_cast<int>(d));
        }
      }
      c.selftest.quick = o.boolean("quick", c.selftest.quick);
      o.finish();
    }

    r.finish();
    return c;
  }

}
