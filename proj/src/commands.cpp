#include "fracheat/commands.h"
#include "fracheat/acceptance.h"
#include "fracheat/catalog.h"
#include "fracheat/errors.h"
#include "fracheat/grid_field.h"
#include "fracheat/kernel.h"
#include "fracheat/master_operator.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace fracheat {

  using nlohmann::json;
  namespace fs = std::filesystem;

  namespace {

    json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

    std::string g17(double v)
    {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return buf;
    }

    std::string fmt(const char* f, auto... args)
    {
      char buf[512];
      std::snprintf(buf, sizeof buf, f, args...);
      return buf;
    }

    json cyl_json(const ParabolicCylinder& Q)
    {
      return json{{"center", Q.center_x}, {"radius", Q.radius}, {"t_lo", Q.t_lo}, {"t_hi", Q.t_hi}};
    }

    json point_json(const SpaceTimePoint& p) { return json{{"x", p.x}, {"t", p.t}}; }

    struct Writer {
      fs::path dir;
      CommandOutcome* out;

      Writer(const RunConfig& cfg, const std::string& cmd, CommandOutcome* o) : dir(fs::path(cfg.output_dir) / cmd), out(o)
      {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec)
          throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
      }

      void text(const std::string& name, const std::string& body)
      {
        const auto p = dir / name;
        std::ofstream f(p, std::ios::binary);
        if (!f)
          throw IoError("cannot write " + p.string());
        f << body;
        if (!f)
          throw IoError("write failed: " + p.string());
        out->artifacts.push_back(p.string());
      }

      void report(const json& j)
      {
        out->report = j.dump(2) + "\n";
        text("report.json", out->report);
      }

      // header row, then rows of numbers at 17 significant digits
      void csv(const std::string& name, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows)
      {
        std::string body;
        for (std::size_t i = 0; i < header.size(); ++i)
          body += (i ? "," : "") + header[i];
        body += "\n";
        for (const auto& r : rows) {
          for (std::size_t i = 0; i < r.size(); ++i)
            body += (i ? "," : "") + g17(r[i]);
          body += "\n";
        }
        text(name, body);
      }

      void grid(const std::string& stem, const GridField& g)
      {
        const auto p = dir / (stem + ".json");
        save_grid(g, p.string());
        out->artifacts.push_back(p.string());
        out->artifacts.push_back(csv_path_for(p.string()));
      }

      // gnuplot recipe; data only, nothing is rendered here
      void recipe(const std::string& csv_name, const std::string& using_clause, const std::string& style,
                  const std::string& title)
      {
        text("plot.gp", "# gnuplot -p plot.gp\n"
                        "set datafile separator ','\n"
                        "set key autotitle columnhead\n"
                        "set title '" + title + "'\n"
                        "plot '" + csv_name + "' using " + using_clause + " with " + style + "\n");
      }
    };

    std::vector<std::string> coord_header(int n)
    {
      std::vector<std::string> h;
      for (int a = 0; a < n; ++a)
        h.push_back("x" + std::to_string(a + 1));
      h.push_back("t");
      return h;
    }

    CatalogField field_named(const RunConfig& cfg, const std::string& name)
    {
      const CatalogContext ctx{cfg.frac, cfg.quad, cfg.base_dir};
      auto f = build_field(cfg.fields.at(name), ctx, "config.fields." + name);
      f.name = name;
      return f;
    }

    GridField box_grid(const ParabolicCylinder& Q, int nx, int nt, const std::string& name)
    {
      std::vector<Axis> axes;
      for (int a = 0; a < Q.n(); ++a)
        axes.push_back(Axis{Q.center_x[a] - Q.radius, Q.center_x[a] + Q.radius, nx});
      return GridField::make(name, axes, Axis{Q.t_lo, Q.t_hi, nt});
    }

    std::vector<std::vector<double>> grid_rows(const GridField& g)
    {
      std::vector<std::vector<double>> rows;
      std::vector<double> x;
      double t;
      for (std::size_t i = 0; i < g.values.size(); ++i) {
        g.coords(i, x, t);
        auto r = x;
        r.push_back(t);
        r.push_back(g.values[i]);
        rows.push_back(std::move(r));
      }
      return rows;
    }

    json base_report(const RunConfig& cfg, const std::string& cmd, const std::string& action)
    {
      return json{{"command", cmd}, {"action", action}, {"n", cfg.frac.n}, {"s", cfg.frac.s}, {"seed", cfg.seed}};
    }

    // ---- kernel

    CommandOutcome cmd_kernel(const std::string& action, const RunConfig& cfg)
    {
      CommandOutcome out;
      Writer w(cfg, "kernel", &out);
      const auto& p = cfg.frac;
      json rep = base_report(cfg, "kernel", action);
      if (action == "eval") {
        json pts = json::array();
        for (const auto& pt : cfg.kernel.points) {
          json e{{"dx", pt.x}, {"dt", pt.t}, {"value", num(eval_kernel(p, pt.x, pt.t))}};
          if (pt.t > 0.0) {
            e["grad_x"] = eval_kernel_grad_x(p, pt.x, pt.t);
            e["hess_x"] = eval_kernel_hess_x(p, pt.x, pt.t);
            e["dt_derivative"] = num(eval_kernel_dt(p, pt.x, pt.t));
          }
          pts.push_back(e);
        }
        rep["c_ns"] = p.c_ns;
        rep["points"] = pts;
        std::vector<std::vector<double>> rows;
        std::vector<double> dx(p.n, 0.0);
        for (double dt : {0.25, 1.0, 4.0})
          for (int i = 0; i <= 160; ++i) {
            dx[0] = -4.0 + 0.05 * i;
            rows.push_back({dx[0], dt, eval_kernel(p, dx, dt)});
          }
        w.csv("kernel_profile.csv", {"x1", "dt", "G"}, rows);
        w.recipe("kernel_profile.csv", "1:3", "points", "kernel profiles along x1");
        out.console = fmt("kernel eval: %zu points, C_{n,s} = %.17g\n", cfg.kernel.points.size(), p.c_ns);
        for (const auto& e : pts)
          out.console += fmt("dt %g  G %.12g\n", e["dt"].get<double>(), e["value"].is_null() ? NAN : e["value"].get<double>());
      } else {
        const auto res = key_inequality_suite(p, cfg.kernel.samples, static_cast<unsigned long long>(cfg.seed),
                                              cfg.kernel.slack);
        rep["samples"] = res.samples;
        rep["violations"] = res.violations;
        rep["gap_violations"] = res.gap_violations;
        rep["min_log_margin"] = num(res.min_margin);
        rep["slack"] = cfg.kernel.slack;
        rep["worst"] = json{{"y", res.worst_y}, {"center", res.worst_center}, {"tau", res.worst_tau},
                            {"power", res.worst_power}};
        out.exit_code = res.violations == 0 && res.gap_violations == 0 ? 0 : 1;
        out.console = fmt("kernel check-lemma: %ld samples, %ld violations, %ld negative gaps, min log-margin %.4g\n",
                          res.samples, res.violations, res.gap_violations, res.min_margin);
      }
      w.report(rep);
      return out;
    }

    // ---- op

    CommandOutcome cmd_op(const std::string& action, const RunConfig& cfg)
    {
      CommandOutcome out;
      Writer w(cfg, "op", &out);
      const auto cf = field_named(cfg, cfg.op.field);
      json rep = base_report(cfg, "op", action);
      rep["field"] = cfg.op.field;
      rep["type"] = cf.type;
      json pts = json::array();
      if (action == "admissible") {
        bool all = true;
        for (const auto& pt : cfg.op.points) {
          const auto a = check_admissible(cfg.frac, cf.field, pt.t);
          all = all && a.pass;
          pts.push_back(json{{"t", pt.t}, {"pass", a.pass}, {"diagnostic", a.diagnostic}});
          out.console += fmt("t = %g: %s %s\n", pt.t, a.pass ? "admissible" : "NOT admissible", a.diagnostic.c_str());
        }
        rep["checks"] = pts;
        out.exit_code = all ? 0 : 1;
        w.report(rep);
        return out;
      }
      std::vector<std::vector<double>> rows;
      for (const auto& pt : cfg.op.points) {
        const auto res = apply_master(cfg.frac, cf.field, pt.x, pt.t, cfg.quad);
        json e = point_json(pt);
        e["value"] = num(res.value);
        e["err_est"] = num(res.error_estimate);
        e["tail_bound"] = num(res.tail_bound);
        e["low_confidence"] = res.low_confidence;
        e["horizon_lag"] = num(res.horizon_lag);
        e["evaluations"] = res.evaluations;
        double exact = NAN;
        if (cf.exact_master) {
          exact = cf.exact_master(pt.x, pt.t);
          e["exact"] = num(exact);
          e["abs_error"] = num(std::fabs(res.value - exact));
        }
        pts.push_back(e);
        auto row = pt.x;
        row.insert(row.end(), {pt.t, res.value, res.error_estimate, exact});
        rows.push_back(row);
        out.console += fmt("value %.12g  err_est %.2e%s\n", res.value, res.error_estimate,
                           std::isfinite(exact) ? fmt("  exact %.12g", exact).c_str() : "");
      }
      rep["results"] = pts;
      auto h = coord_header(cfg.frac.n);
      h.insert(h.end(), {"value", "err_est", "exact"});
      w.csv("op_apply.csv", h, rows);
      w.recipe("op_apply.csv", fmt("%d:%d:%d", cfg.frac.n + 1, cfg.frac.n + 2, cfg.frac.n + 3), "yerrorbars",
               "operator values over t");
      w.report(rep);
      return out;
    }

    // ---- solve

    CommandOutcome cmd_solve(const std::string& action, const RunConfig& cfg)
    {
      CommandOutcome out;
      Writer w(cfg, "solve", &out);
      const auto cf = field_named(cfg, cfg.solve.field);
      const auto& Q = cfg.solve.Q;
      json rep = base_report(cfg, "solve", action);
      rep["field"] = cfg.solve.field;
      rep["cylinder"] = cyl_json(Q);
      const RestrictedSource src{cf.field, Q, RestrictMode::Inside};
      if (action == "w") {
        const GridField tmpl = box_grid(Q, cfg.solve.steps_x, cfg.solve.steps_t, "w");
        const GridField g = solve_w(cfg.frac, cf.field, Q, tmpl, cfg.quad, cfg.threads);
        double sup = 0.0;
        for (double v : g.values)
          sup = std::max(sup, std::fabs(v));
        rep["grid"] = json{{"steps_x", cfg.solve.steps_x}, {"steps_t", cfg.solve.steps_t}, {"file", "w.json"}};
        rep["sup_abs_w"] = sup;
        rep["lemma_sup_bound"] = lemma_sup_constant(cfg.frac.s, Q, cfg.quad);
        w.grid("w", g);
        auto h = coord_header(cfg.frac.n);
        h.push_back("w");
        w.csv("w_points.csv", h, grid_rows(g));
        w.recipe("w_points.csv", cfg.frac.n == 1 ? "1:2:3" : "1:3:4", "points palette", "w = G * (f 1_Q)");
        out.console = fmt("solve w: %zu nodes, sup|w| = %.6g\n", g.values.size(), sup);
      }
      json pts = json::array();
      auto where = cfg.solve.points;
      if (where.empty() && action == "point")   // default: centre of the top of Q
        where.push_back(SpaceTimePoint{Q.center_x, Q.t_hi});
      for (const auto& pt : where) {
        const auto r = convolve_green(cfg.frac, src, pt.x, pt.t, cfg.quad);
        json e = point_json(pt);
        e["value"] = num(r.value);
        e["err_est"] = num(r.error_estimate);
        e["tail"] = num(r.tail);
        e["evaluations"] = r.evaluations;
        pts.push_back(e);
        out.console += fmt("w(x, %.6g) = %.12g  err_est %.2e\n", pt.t, r.value, r.error_estimate);
      }
      rep["points"] = pts;
      w.report(rep);
      return out;
    }

    // ---- decompose

    CommandOutcome cmd_decompose(const std::string& action, const RunConfig& cfg)
    {
      CommandOutcome out;
      Writer w(cfg, "decompose", &out);
      const auto uf = field_named(cfg, cfg.decompose.u);
      const auto ff = field_named(cfg, cfg.decompose.f);
      const auto& Q = cfg.decompose.Q;
      GridField u = box_grid(Q, cfg.decompose.steps_x, cfg.decompose.steps_t, "u");
      sample_into(u, uf.field, cfg.threads);
      DecomposeOptions opt;
      opt.threads = cfg.threads;
      opt.spot_checks = cfg.decompose.spot_checks;
      opt.spot_tol = cfg.decompose.spot_tol;
      opt.u_field = uf.field;
      const auto d = decompose(cfg.frac, u, ff.field, Q, cfg.quad, opt);
      json rep = base_report(cfg, "decompose", action);
      rep["u"] = cfg.decompose.u;
      rep["f"] = cfg.decompose.f;
      rep["cylinder"] = cyl_json(Q);
      rep["spot_residual"] = num(d.spot_residual);
      rep["spot_points"] = d.spot_points;
      rep["spot_ok"] = d.spot_ok;
      rep["diagnostic"] = d.diagnostic;
      double sv = 0.0, sw = 0.0;
      for (double v : d.v.values)
        sv = std::max(sv, std::fabs(v));
      for (double v : d.w.values)
        sw = std::max(sw, std::fabs(v));
      rep["sup_abs_v"] = sv;
      rep["sup_abs_w"] = sw;
      w.grid("u", u);
      w.grid("v", d.v);
      w.grid("w", d.w);
      std::vector<std::vector<double>> rows = grid_rows(u);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].push_back(d.v.values[i]);
        rows[i].push_back(d.w.values[i]);
      }
      auto h = coord_header(cfg.frac.n);
      h.insert(h.end(), {"u", "v", "w"});
      w.csv("decomposition.csv", h, rows);
      w.recipe("decomposition.csv", cfg.frac.n == 1 ? "1:2:4" : "1:3:5", "points palette", "homogeneous part v");
      w.report(rep);
      out.exit_code = d.spot_ok ? 0 : 1;
      out.console = fmt("decompose: spot residual %.3e over %d points (%s), sup|v| %.6g, sup|w| %.6g\n", d.spot_residual,
                        d.spot_points, d.spot_ok ? "ok" : "FAILED", sv, sw);
      return out;
    }

    // ---- reg

    void bins_csv(Writer& w, const HolderReport& rep)
    {
      std::vector<std::vector<double>> rows;
      for (std::size_t c = 0; c < rep.components.size(); ++c)
        for (const auto& b : rep.components[c].bins)
          rows.push_back({static_cast<double>(c), b.distance, b.increment, static_cast<double>(b.pairs)});
      w.csv("reg_bins.csv", {"component", "distance", "increment", "pairs"}, rows);
      w.recipe("reg_bins.csv", "2:3", "points", "largest increment per distance bin (log-log)");
    }

    CommandOutcome cmd_reg(const std::string& action, const RunConfig& cfg)
    {
      CommandOutcome out;
      Writer w(cfg, "reg", &out);
      const auto uf = field_named(cfg, cfg.reg.field);
      const auto& R = cfg.reg;
      HolderReport rep;
      if (action == "holder") {
        GridField u = box_grid(R.Q, R.steps_x, R.steps_t, "u");
        sample_into(u, uf.field, cfg.threads);
        rep = R.holder.mode == HolderMode::LogLipschitz ? estimate_log_lipschitz(u, R.Q, R.holder)
                                                        : estimate_parabolic_holder(u, R.Q, R.holder);
      } else {
        const auto ff = field_named(cfg, R.source);
        GridField ut = box_grid(R.Qt, R.steps_x, R.steps_t, "u_inner");
        GridField uq = box_grid(R.Q, R.outer_steps_x, R.outer_steps_t, "u_outer");
        GridField fq = GridField::like(uq, "f_outer");
        sample_into(ut, uf.field, cfg.threads);
        sample_into(uq, uf.field, cfg.threads);
        sample_into(fq, ff.field, cfg.threads);
        const auto kind = R.theorem == "schauder" ? TheoremKind::Schauder : TheoremKind::Holder;
        rep = check_estimate_theorem(ut, fq, cfg.frac.s, R.alpha, kind, R.Qt, R.Q, R.holder, &uq);
      }
      json j = json::parse(report_json(rep));
      j["command"] = "reg";
      j["action"] = action;
      j["field"] = R.field;
      j["n"] = cfg.frac.n;
      j["s"] = cfg.frac.s;
      bins_csv(w, rep);
      w.report(j);
      out.console = fmt("reg %s: %s, norm %.6g, seminorm %.6g, effective exponent %.4g", action.c_str(),
                        rep.case_name.c_str(), rep.norm, rep.seminorm, rep.effective_exponent);
      if (std::isfinite(rep.theorem_ratio))
        out.console += fmt(", theorem ratio %.6g", rep.theorem_ratio);
      out.console += "\n";
      return out;
    }

    // ---- rescale

    CommandOutcome cmd_rescale(const std::string& action, const RunConfig& cfg)
    {
      CommandOutcome out;
      Writer w(cfg, "rescale", &out);
      const auto& B = cfg.rescale;
      const auto table = scaling_exponent_table(B.prob);
      json rep = base_report(cfg, "rescale", action);
      rep["p"] = B.prob.p;
      rep["q"] = B.prob.q;
      if (action == "table") {
        rep["exponents"] = json::parse(rescale_json(RescaleResult{}, table))["exponents"];
        w.report(rep);
        out.console = fmt("2s/(p-1) = %.6g, (p-1)/(2s) = %.6g, 2sp/(p-1) = %.6g, gradient term %.6g%s, p range %s\n",
                          table.two_s_over_pm1, table.pm1_over_two_s, table.two_sp_over_pm1, table.gradient_term,
                          table.critical ? " (critical)" : "", table.p_admissible ? "admissible" : "outside");
        return out;
      }
      json runs = json::array();
      std::vector<std::vector<double>> rows;
      bool ok = true;
      const auto one = [&](const GridField& g, const std::string& stem, double height) {
        auto res = select_blowup_point(g, B.X, B.R, B.prob, B.variant);
        rescale_field(g, res, B.R, B.prob, B.steps_x, B.steps_t);
        ok = ok && res.radius_ok && res.chain_ok && res.ceiling_ok;
        json j = json::parse(rescale_json(res, table));
        j.erase("exponents");
        j["height"] = num(height);
        j["v_k_file"] = stem + ".json";
        runs.push_back(j);
        w.grid(stem, res.v_k);
        if (res.variant == BlowupVariant::HeightPlusGradient)
          w.grid(stem + "_combined", res.combined);
        rows.push_back({res.value_at_X, res.lambda_k, res.m_k, res.max_value});
      };
      if (B.field == "synthetic") {
        for (std::size_t i = 0; i < B.heights.size(); ++i) {
          const auto g = synthetic_blowup_grid(B.prob, B.heights[i], B.R, B.X, B.spike, B.grid_steps);
          one(g, "v_k_" + std::to_string(i), B.heights[i]);
        }
      } else {
        const auto cf = field_named(cfg, B.field);
        if (!cf.field.grid_source)
          throw ConfigError("config.rescale.field: not a grid field");
        one(*cf.field.grid_source, "v_k_0", NAN);
      }
      rep["exponents"] = json::parse(rescale_json(RescaleResult{}, table))["exponents"];
      rep["runs"] = runs;
      if (rows.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (const auto& r : rows) {
          mx += std::log(r[0]);
          my += std::log(r[1]);
        }
        mx /= rows.size();
        my /= rows.size();
        double sxy = 0.0, sxx = 0.0;
        for (const auto& r : rows) {
          sxy += (std::log(r[0]) - mx) * (std::log(r[1]) - my);
          sxx += (std::log(r[0]) - mx) * (std::log(r[0]) - mx);
        }
        const double slope = sxx > 0.0 ? sxy / sxx : NAN;
        rep["lambda_slope"] = num(slope);
        rep["target_slope"] = -table.pm1_over_two_s;
        out.console += fmt("lambda_k log-log slope %.6f (target %.6f)\n", slope, -table.pm1_over_two_s);
      }
      w.csv("rescale.csv", {"value_at_X", "lambda_k", "m_k", "max_v"}, rows);
      w.recipe("rescale.csv", "(log($1)):(log($2))", "linespoints", "log lambda_k against log u(X_k)");
      w.report(rep);
      out.exit_code = ok ? 0 : 1;
      out.console = fmt("rescale demo: %zu selections, invariants %s\n", rows.size(), ok ? "hold" : "FAILED") + out.console;
      return out;
    }

    // ---- selftest

    CommandOutcome cmd_selftest(const std::string& action, const RunConfig& cfg)
    {
      CommandOutcome out;
      Writer w(cfg, "selftest", &out);
      AcceptanceOptions opt;
      opt.threads = cfg.threads;
      opt.quick = cfg.selftest.quick;
      opt.seed += static_cast<unsigned long long>(cfg.seed);
      json res = json::array();
      int failed = 0;
      out.console = "criterion                          result  seconds  summary\n";
      run_acceptance(cfg.selftest.criteria, opt, [&](const CriterionResult& r) {
        failed += r.pass ? 0 : 1;
        res.push_back(json{{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail}});
        out.console += fmt("%d %-32s %-6s %8.1f  %s\n", r.id, r.title.c_str(), r.pass ? "PASS" : "FAIL", r.seconds,
                           r.summary.c_str());
      });
      json rep = base_report(cfg, "selftest", action);
      rep["quick"] = cfg.selftest.quick;
      rep["criteria"] = res;
      rep["passed"] = static_cast<int>(res.size()) - failed;
      rep["failed"] = failed;
      w.report(rep);
      out.console += fmt("%d of %zu criteria passed\n", static_cast<int>(res.size()) - failed, res.size());
      out.exit_code = failed ? 1 : 0;
      return out;
    }

  }

  std::vector<std::string> command_names() { return {"kernel", "op", "solve", "decompose", "reg", "rescale", "selftest"}; }

  std::vector<std::string> command_actions(const std::string& cmd)
  {
    if (cmd == "kernel")
      return {"check-lemma", "eval"};
    if (cmd == "op")
      return {"apply", "admissible"};
    if (cmd == "solve")
      return {"w", "point"};
    if (cmd == "decompose")
      return {"run"};
    if (cmd == "reg")
      return {"holder", "theorem"};
    if (cmd == "rescale")
      return {"demo", "table"};
    if (cmd == "selftest")
      return {"run"};
    return {};
  }

  CommandOutcome run_subcommand(const std::string& cmd, const std::string& action_in, const RunConfig& cfg)
  {
    const auto acts = command_actions(cmd);
    if (acts.empty()) {
      std::string known;
      for (const auto& c : command_names())
        known += (known.empty() ? "" : ", ") + c;
      throw ArgumentError("unknown command '" + cmd + "' (" + known + ")");
    }
    const std::string action = action_in.empty() ? acts.front() : action_in;
    if (std::find(acts.begin(), acts.end(), action) == acts.end()) {
      std::string known;
      for (const auto& a : acts)
        known += (known.empty() ? "" : ", ") + a;
      throw ArgumentError("unknown action '" + action + "' for " + cmd + " (" + known + ")");
    }
    if (cmd == "kernel")
      return cmd_kernel(action, cfg);
    if (cmd == "op")
      return cmd_op(action, cfg);
    if (cmd == "solve")
      return cmd_solve(action, cfg);
    if (cmd == "decompose")
      return cmd_decompose(action, cfg);
    if (cmd == "reg")
      return cmd_reg(action, cfg);
    if (cmd == "rescale")
      return cmd_rescale(action, cfg);
    return cmd_selftest(action, cfg);
  }

}
