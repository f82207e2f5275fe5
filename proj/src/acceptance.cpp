#include "fracheat/acceptance.h"
#include "fracheat/catalog.h"
#include "fracheat/errors.h"
#include "fracheat/greens.h"
#include "fracheat/kernel.h"
#include "fracheat/master_operator.h"
#include "fracheat/regularity.h"
#include "fracheat/rescale.h"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <cmath>
#include <random>

namespace fracheat {

  using nlohmann::json;

  namespace {

    using Clock = std::chrono::steady_clock;

    double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

    std::string fmt(const char* f, auto... args)
    {
      char buf[512];
      std::snprintf(buf, sizeof buf, f, args...);
      return buf;
    }

    json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

    // 1: e^{lambda t} cos(k x) against (lambda + k^2)^s
    CriterionResult symbol_suite(const AcceptanceOptions&)
    {
      CriterionResult r;
      QuadratureSpec spec;
      const auto t0 = Clock::now();
      double worst = 0.0, worst_identity = 0.0;
      json cases = json::array();
      for (double s : {0.25, 0.5, 0.75})
        for (double lam : {0.0, 0.5, 1.0, 2.0})
          for (double k : {0.5, 1.0, 2.0}) {
            const auto p = FracParams::make(1, s);
            FieldHandle u = make_field(
                1, [lam, k](std::span<const double> x, double t) { return std::exp(lam * t) * std::cos(k * x[0]); },
                lam > 0.0 ? Growth::exponential_in_time(lam) : Growth::bounded(), "exp_cos");
            const double x[1] = {0.3};
            const double t = 0.2;
            const auto res = apply_master(p, u, x, t, spec);
            const double exact = std::pow(lam + k * k, s) * u(x, t);
            const double rel = std::fabs(res.value - exact) / std::fabs(exact);
            worst = std::max(worst, rel);
            cases.push_back(json{{"s", s}, {"lambda", lam}, {"k", k}, {"value", res.value}, {"exact", exact},
                                 {"rel_error", rel}, {"error_estimate", res.error_estimate}});
          }
      const double seconds = since(t0);
      for (double s : {0.25, 0.5, 0.75})
        for (double a : {0.25, 1.0, 4.0, 0.75, 2.5, 6.0}) {
          const double v = symbol_integral(a, s, spec);
          worst_identity = std::max(worst_identity, std::fabs(v / std::pow(a, s) - 1.0));
        }
      r.pass = worst <= 1e-3 && worst_identity <= 1e-10 && seconds <= 60.0;
      r.summary = fmt("36 cases, worst rel error %.2e (<= 1e-3), identity %.2e (<= 1e-10), %.1f s (<= 60 s)", worst,
                      worst_identity, seconds);
      r.detail = json{{"worst_rel_error", worst}, {"identity_error", worst_identity},
                      {"cases", cases}};
      return r;
    }

    // 2: key inequality, 1e5 samples in each of n = 1, 2, 3
    CriterionResult kernel_suite(const AcceptanceOptions& opt)
    {
      CriterionResult r;
      const auto t0 = Clock::now();
      const long samples = opt.quick ? 20000 : 100000;
      long total = 0, viol = 0, gaps = 0;
      double minm = INFINITY;
      json per = json::array();
      const double svals[3] = {0.25, 0.5, 0.75};
      for (int n = 1; n <= 3; ++n) {
        const auto p = FracParams::make(n, svals[n - 1]);
        const auto res = key_inequality_suite(p, samples, opt.seed + 101ULL * n);
        total += res.samples;
        viol += res.violations;
        gaps += res.gap_violations;
        minm = std::min(minm, res.min_margin);
        per.push_back(json{{"n", n}, {"s", p.s}, {"samples", res.samples}, {"violations", res.violations},
                           {"gap_violations", res.gap_violations}, {"min_log_margin", res.min_margin}});
      }
      const double seconds = since(t0);
      r.pass = viol == 0 && gaps == 0 && seconds <= 10.0;
      r.summary = fmt("%ld samples, %ld violations, %ld negative gaps, min log-margin %.3g, %.1f s (<= 10 s)", total,
                      viol, gaps, minm, seconds);
      r.detail = json{{"per_dimension", per}};
      return r;
    }

    // 3: apply_master(G * f 1_Q) - f at interior points
    CriterionResult round_trip(const AcceptanceOptions& opt)
    {
      CriterionResult r;
      QuadratureSpec spec;
      const auto t0 = Clock::now();
      const int seeds = opt.quick ? 1 : 5;
      const int npts = opt.quick ? 4 : 20;
      double worst = 0.0;
      long low_conf = 0;
      json runs = json::array();
      for (int n = 1; n <= 2; ++n)
        for (double s : {0.3, 0.5, 0.7}) {
          const auto p = FracParams::make(n, s);
          const auto Q = ParabolicCylinder::box(std::vector<double>(n, 0.0), 2.0, 0.0, 3.0);
          for (int k = 0; k < seeds; ++k) {
            const unsigned long long sd = opt.seed + 1000ULL * n + 17ULL * k + static_cast<unsigned long long>(10 * s);
            const auto f = smooth_random_source(n, sd);
            const auto w = green_field(p, RestrictedSource{f, Q, RestrictMode::Inside}, spec);
            std::mt19937_64 rng(sd ^ 0x9e3779b97f4a7c15ULL);
            std::uniform_real_distribution<double> U(-1.0, 1.0), T(0.5, 2.75);
            std::vector<SpaceTimePoint> pts(npts);
            for (auto& pt : pts) {
              // uniform in the ball |x| <= 1.5
              do {
                pt.x.assign(n, 0.0);
                for (auto& v : pt.x)
                  v = 1.5 * U(rng);
              } while (std::sqrt(std::inner_product(pt.x.begin(), pt.x.end(), pt.x.begin(), 0.0)) > 1.5);
              pt.t = T(rng);
            }
            std::vector<double> rel(npts);
            std::vector<char> lc(npts);
            parallel_for(npts, opt.threads, [&](std::size_t i) {
              const auto res = apply_master(p, w, pts[i].x, pts[i].t, spec);
              const double fv = f(pts[i].x, pts[i].t);
              rel[i] = std::fabs(res.value - fv) / std::fabs(fv);
              lc[i] = res.low_confidence;
            });
            const double mx = *std::max_element(rel.begin(), rel.end());
            worst = std::max(worst, mx);
            low_conf += std::count(lc.begin(), lc.end(), 1);
            runs.push_back(json{{"n", n}, {"s", s}, {"seed", sd}, {"points", npts}, {"max_rel_error", mx}});
          }
        }
      const double seconds = since(t0);
      r.pass = worst <= 1e-2 && seconds <= 600.0;
      r.summary = fmt("%d sources x %d points, worst rel residual %.2e (<= 1e-2), %ld low-confidence, %.0f s (<= 600 s)",
                      static_cast<int>(runs.size()), npts, worst, low_conf, seconds);
      r.detail = json{{"runs", runs}, {"worst_rel_error", worst}};
      return r;
    }

    // 4: the operator annihilates G away from its pole
    CriterionResult caloric(const AcceptanceOptions& opt)
    {
      CriterionResult r;
      QuadratureSpec spec;
      std::mt19937_64 rng(opt.seed + 4);
      std::uniform_real_distribution<double> U(0.0, 1.0);
      std::normal_distribution<double> N01;
      const int npts = opt.quick ? 12 : 50;
      double worst = 0.0;
      json pts = json::array();
      const double svals[3] = {0.3, 0.5, 0.7};
      for (int i = 0; i < npts; ++i) {
        const int n = 1 + i % 2;
        const double s = svals[(i / 2) % 3];
        const auto p = FracParams::make(n, s);
        std::vector<double> x0(n), x(n);
        for (auto& v : x0)
          v = U(rng) - 0.5;
        const double t0 = U(rng) - 0.5;
        const double T = 0.25 + 2.75 * U(rng);
        const double d = 1.0 + 2.0 * U(rng);
        double nrm = 0.0;
        for (auto& v : x) {
          v = N01(rng);
          nrm += v * v;
        }
        for (int a = 0; a < n; ++a)
          x[a] = x0[a] + d * x[a] / std::sqrt(nrm);
        const auto G = fundamental_snapshot(p, x0, t0);
        const auto res = apply_master(p, G, x, t0 + T, spec);
        const std::vector<double> zero(n, 0.0);
        const double scale = eval_green(p, zero, T);
        const double rel = std::fabs(res.value) / scale;
        worst = std::max(worst, rel);
        pts.push_back(json{{"n", n}, {"s", s}, {"lag", T}, {"distance", d}, {"value", res.value}, {"scale", scale},
                           {"ratio", rel}});
      }
      r.pass = worst <= 1e-4;
      r.summary = fmt("%d points, worst |value|/G-scale %.2e (<= 1e-4)", npts, worst);
      r.detail = json{{"points", pts}, {"worst_ratio", worst}};
      return r;
    }

    GridField grid_on(const ParabolicCylinder& Q, int nx, int nt, const std::string& name)
    {
      std::vector<Axis> axes;
      for (int a = 0; a < Q.n(); ++a)
        axes.push_back(Axis{Q.center_x[a] - Q.radius, Q.center_x[a] + Q.radius, nx});
      return GridField::make(name, axes, Axis{Q.t_lo, Q.t_hi, nt});
    }

    struct RatioRun {
      double ratio = 0.0;
      double ratio_fine = 0.0;
      HolderReport rep;
    };

    // theorem ratio of u = G * (f 1_Omega), Omega containing Q, on two Qt resolutions
    RatioRun holder_ratio(double s, unsigned long long seed, bool refine, int threads, bool quick)
    {
      QuadratureSpec spec;
      const auto p = FracParams::make(1, s);
      const auto Q = ParabolicCylinder::box({0.0}, 2.0, 0.0, 3.0);
      const auto Qt = ParabolicCylinder::box({0.0}, 1.0, 1.0, 2.0);
      const auto Om = ParabolicCylinder::box({0.0}, 3.0, -1.0, 3.5);
      const RestrictedSource src{smooth_random_source(1, seed), Om, RestrictMode::Inside};
      const auto u = green_field(p, src, spec);
      const auto ff = src.as_field();

      GridField uq = grid_on(Q, quick ? 17 : 33, quick ? 13 : 25, "u_Q");
      GridField fq = GridField::like(uq, "f_Q");
      sample_into(uq, u, threads);
      sample_into(fq, ff, threads);
      HolderSpec hs;
      hs.seed = static_cast<long long>(seed);
      RatioRun out;
      GridField ut = grid_on(Qt, 129, 33, "u_Qt");
      sample_into(ut, u, threads);
      out.rep = check_estimate_theorem(ut, fq, s, std::nullopt, TheoremKind::Holder, Qt, Q, hs, &uq);
      out.ratio = out.rep.theorem_ratio;
      if (refine) {
        GridField uf = grid_on(Qt, 257, 65, "u_Qt_fine");
        sample_into(uf, u, threads);
        out.ratio_fine = check_estimate_theorem(uf, fq, s, std::nullopt, TheoremKind::Holder, Qt, Q, hs, &uq).theorem_ratio;
      }
      return out;
    }

    CriterionResult theorem_ratio(const AcceptanceOptions& opt)
    {
      CriterionResult r;
      const int seeds = opt.quick ? 2 : 5;
      const double s = 0.3;
      std::vector<double> ratios;
      double worst_change = 0.0;
      json runs = json::array();
      for (int k = 0; k < seeds; ++k) {
        const auto sd = opt.seed + 500ULL + 31ULL * k;
        const auto run = holder_ratio(s, sd, !opt.quick, opt.threads, opt.quick);
        ratios.push_back(run.ratio);
        const double change = opt.quick ? 0.0 : std::fabs(run.ratio_fine / run.ratio - 1.0);
        worst_change = std::max(worst_change, change);
        runs.push_back(json{{"seed", sd}, {"ratio", num(run.ratio)}, {"ratio_refined", num(run.ratio_fine)},
                            {"refinement_change", num(change)}, {"case", run.rep.case_name},
                            {"effective_exponent", num(run.rep.effective_exponent)}});
      }
      const double mx = *std::max_element(ratios.begin(), ratios.end());
      const double mn = *std::min_element(ratios.begin(), ratios.end());
      const double spread = mn > 0.0 ? mx / mn : INFINITY;

      // s = 1/2 puts the left side in the log-Lipschitz class
      const auto half = holder_ratio(0.5, opt.seed + 777ULL, false, opt.threads, opt.quick);
      bool loglip = !half.rep.components.empty();
      for (const auto& c : half.rep.components)
        if (c.pairs != PairKind::Time && c.modulus != Modulus::LogLipschitz)
          loglip = false;
      const bool half_ok = loglip && std::isfinite(half.ratio) && half.ratio > 0.0;

      r.pass = std::isfinite(spread) && spread < 10.0 && worst_change <= 0.3 && half_ok;
      r.summary = fmt("s=0.3 ratios in [%.3g, %.3g], spread %.2f (< 10), refinement change %.1f%% (<= 30%%); "
                      "s=0.5 log-Lipschitz %s, ratio %.3g",
                      mn, mx, spread, 100.0 * worst_change, loglip ? "engaged" : "NOT engaged", half.ratio);
      r.detail = json{{"runs", runs}, {"spread", num(spread)}, {"worst_refinement_change", worst_change},
                      {"half", json{{"case", half.rep.case_name}, {"ratio", num(half.ratio)}, {"log_lipschitz", loglip}}}};
      return r;
    }

    // 6: v from sources outside Q; C^2 norms on Qt over sup_Q |v|
    CriterionResult homogeneous(const AcceptanceOptions& opt)
    {
      CriterionResult r;
      QuadratureSpec spec;
      const int seeds = opt.quick ? 2 : 5;
      const auto Q = ParabolicCylinder::box({0.0}, 2.0, 0.0, 3.0);
      const auto Qt = ParabolicCylinder::box({0.0}, 1.0, 1.0, 2.0);
      const auto big = ParabolicCylinder::box({0.0}, 4.0, -1.0, 3.5);
      std::vector<double> ratios;
      json runs = json::array();
      for (int k = 0; k < seeds; ++k) {
        const auto sd = opt.seed + 600ULL + 37ULL * k;
        const double s = k % 2 ? 0.7 : 0.4;
        const auto p = FracParams::make(1, s);
        const auto base = RestrictedSource{smooth_random_source(1, sd), big, RestrictMode::Inside}.as_field();
        const auto v = green_field(p, RestrictedSource{base, Q, RestrictMode::Outside}, spec);
        GridField vq = grid_on(Q, opt.quick ? 17 : 33, opt.quick ? 13 : 25, "v_Q");
        GridField vt = grid_on(Qt, opt.quick ? 65 : 129, 33, "v_Qt");
        sample_into(vq, v, opt.threads);
        sample_into(vt, v, opt.threads);
        const auto rep = homogeneous_estimate(vt, Qt, Q, &vq);
        ratios.push_back(rep.theorem_ratio);
        runs.push_back(json{{"seed", sd}, {"s", s}, {"ratio", num(rep.theorem_ratio)}, {"sup_Q", num(rep.right_side)},
                            {"c2_norm", num(rep.norm)}});
      }
      const double mx = *std::max_element(ratios.begin(), ratios.end());
      const double mn = *std::min_element(ratios.begin(), ratios.end());
      const double spread = mn > 0.0 ? mx / mn : INFINITY;
      r.pass = std::isfinite(spread) && spread < 10.0;
      r.summary = fmt("%d exterior sources, C^2(Qt)/sup_Q|v| in [%.3g, %.3g], spread %.2f (< 10)", seeds, mn, mx, spread);
      r.detail = json{{"runs", runs}, {"spread", num(spread)}};
      return r;
    }

    // 7: blow-up normalization on a self-similar family with an off-centre spike
    CriterionResult rescaling(const AcceptanceOptions&)
    {
      CriterionResult r;
      BlowupProblem prob;
      prob.n = 1;
      prob.s = 0.75;
      prob.p = 1.5;
      prob.validate_height_regime();
      const double R = 1.0;
      const SpaceTimePoint X{{0.3}, 1.0};
      std::vector<double> lu, ll;
      bool exact = true, ceiling = true, radius = true, chain = true;
      double vmax = 0.0;
      json runs = json::array();
      for (double H : {1e2, 1e3, 1e4}) {
        const auto g = synthetic_blowup_grid(prob, H, R, X, true, 201);
        auto res = select_blowup_point(g, X, R, prob, BlowupVariant::Height);
        rescale_field(g, res, R, prob);
        exact = exact && res.origin_value == 1.0;
        ceiling = ceiling && res.max_value <= res.bound + 1e-3;
        radius = radius && res.radius_ok;
        chain = chain && res.chain_ok;
        vmax = std::max(vmax, res.max_value);
        lu.push_back(std::log(res.value_at_X));
        ll.push_back(std::log(res.lambda_k));
        runs.push_back(json{{"height", H}, {"u_X", res.value_at_X}, {"A_k", json{{"x", res.A_k.x}, {"t", res.A_k.t}}},
                            {"lambda_k", res.lambda_k}, {"m_k", res.m_k}, {"radius_defect", res.radius_defect},
                            {"chain_defect", res.chain_defect}, {"max_v", res.max_value}, {"bound", res.bound}});
      }
      // least-squares slope of log lambda against log u(X)
      const double mu = (lu[0] + lu[1] + lu[2]) / 3.0, ml = (ll[0] + ll[1] + ll[2]) / 3.0;
      double sxy = 0.0, sxx = 0.0;
      for (int i = 0; i < 3; ++i) {
        sxy += (lu[i] - mu) * (ll[i] - ml);
        sxx += (lu[i] - mu) * (lu[i] - mu);
      }
      const double slope = sxy / sxx;
      const double target = -(prob.p - 1.0) / (2.0 * prob.s);
      const bool slope_ok = std::fabs(slope / target - 1.0) <= 0.05;
      r.pass = exact && ceiling && radius && chain && slope_ok;
      r.summary = fmt("v_k(0,0)=1 %s, max v_k %.4g (<= %.4g), slope %.5f (target %.5f), radius inequality %s, chain %s",
                      exact ? "exact" : "NOT exact", vmax, std::pow(2.0, 2.0 * prob.s / (prob.p - 1.0)) + 1e-3, slope,
                      target, radius ? "holds" : "FAILS", chain ? "holds" : "FAILS");
      r.detail = json{{"runs", runs}, {"slope", slope}, {"target_slope", target}};
      return r;
    }

    // 8: Marchaud derivative of e^{2t}, and the lifted field through the full operator
    CriterionResult marchaud(const AcceptanceOptions&)
    {
      CriterionResult r;
      QuadratureSpec spec;
      const auto p = FracParams::make(1, 0.5);
      const auto lifted =
          lift_space_independent(1, [](double t) { return std::exp(2.0 * t); }, Growth::exponential_in_time(2.0), "exp_time");
      double worst = 0.0, worst_agree = 0.0;
      json pts = json::array();
      for (int i = 0; i < 10; ++i) {
        const double t = -1.0 + 2.0 * i / 9.0;
        const auto m = apply_marchaud(0.5, [](double tt) { return std::exp(2.0 * tt); }, t, spec);
        const double exact = std::sqrt(2.0) * std::exp(2.0 * t);
        const double x[1] = {0.0};
        const auto a = apply_master(p, lifted, x, t, spec);
        const double rel = std::fabs(m.value / exact - 1.0);
        const double agree = std::fabs(a.value / m.value - 1.0);
        worst = std::max(worst, rel);
        worst_agree = std::max(worst_agree, agree);
        pts.push_back(json{{"t", t}, {"marchaud", m.value}, {"master", a.value}, {"exact", exact}, {"rel_error", rel},
                           {"agreement", agree}});
      }
      r.pass = worst <= 1e-4 && worst_agree <= 1e-6;
      r.summary = fmt("10 times, worst rel error %.2e (<= 1e-4), operator agreement %.2e (<= 1e-6)", worst, worst_agree);
      r.detail = json{{"points", pts}};
      return r;
    }

  }

  std::string criterion_title(int id)
  {
    switch (id) {
    case 1: return "symbol oracle";
    case 2: return "kernel inequality";
    case 3: return "representation round trip";
    case 4: return "caloric check";
    case 5: return "theorem-ratio uniformity";
    case 6: return "homogeneous estimate";
    case 7: return "rescaling invariants";
    case 8: return "Marchaud reduction";
    }
    throw ArgumentError("criterion id must be 1.." + std::to_string(kCriteriaCount));
  }

  CriterionResult run_criterion(int id, const AcceptanceOptions& opt)
  {
    const std::string title = criterion_title(id);
    const auto t0 = Clock::now();
    CriterionResult r;
    try {
      switch (id) {
      case 1: r = symbol_suite(opt); break;
      case 2: r = kernel_suite(opt); break;
      case 3: r = round_trip(opt); break;
      case 4: r = caloric(opt); break;
      case 5: r = theorem_ratio(opt); break;
      case 6: r = homogeneous(opt); break;
      case 7: r = rescaling(opt); break;
      case 8: r = marchaud(opt); break;
      }
    } catch (const std::exception& e) {
      r.pass = false;
      r.summary = std::string("error: ") + e.what();
    }
    r.id = id;
    r.title = title;
    r.seconds = since(t0);
    return r;
  }

  std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids, const AcceptanceOptions& opt,
                                              const std::function<void(const CriterionResult&)>& on_result)
  {
    std::vector<CriterionResult> out;
    for (int id : ids) {
      out.push_back(run_criterion(id, opt));
      if (on_result)
        on_result(out.back());
    }
    return out;
  }

}
