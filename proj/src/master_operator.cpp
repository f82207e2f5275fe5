#include "fracheat/master_operator.h"
#include "fracheat/errors.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace fracheat {

  namespace {

    std::string fmt(const char* f, double a, double b = 0.0)
    {
      char buf[256];
      std::snprintf(buf, sizeof buf, f, a, b);
      return buf;
    }

    // growth envelope slope on a dyadic ladder, NaN when a sample is not finite
    double envelope_slope(const std::vector<double>& scales, const std::vector<double>& env)
    {
      const std::size_t k = env.size();
      const std::size_t j = k - 5;
      if (env[k - 1] <= 0.0)
        return 0.0;
      double lo = std::max(env[j], 1e-300);
      return (std::log(env[k - 1]) - std::log(lo)) / (std::log(scales[k - 1]) - std::log(scales[j]));
    }

    Admissibility sample_growth(const FracParams& p, const FieldHandle& u, double t)
    {
      const int n = u.n;
      std::vector<double> scales, envx, envt;
      double ex = 0.0, et = 0.0;
      std::vector<std::vector<double>> dirs;
      for (int i = 0; i < n; ++i)
        for (double sg : {1.0, -1.0}) {
          std::vector<double> d(n, 0.0);
          d[i] = sg;
          dirs.push_back(d);
        }
      dirs.push_back(std::vector<double>(n, 1.0 / std::sqrt(double(n))));
      std::vector<double> y(n), zero(n, 0.0), e1(n, 0.0);
      e1[0] = 1.0;
      for (int k = 0; k <= 16; ++k) {
        const double R = std::ldexp(1.0, k);
        scales.push_back(R);
        for (const auto& d : dirs) {
          for (int i = 0; i < n; ++i)
            y[i] = R * d[i];
          double v = u.eval(y, t);
          if (!std::isfinite(v))
            return {false, fmt("sampled |u| is not finite at spatial radius %g: faster than any admissible growth", R)};
          ex = std::max(ex, std::fabs(v));
        }
        for (const auto* x0 : {&zero, &e1}) {
          double v = u.eval(*x0, t - R);
          if (!std::isfinite(v))
            return {false, fmt("sampled |u| is not finite at time lag %g: growth into the past", R)};
          et = std::max(et, std::fabs(v));
        }
        envx.push_back(ex);
        envt.push_back(et);
      }
      double sx = envelope_slope(scales, envx);
      double st = envelope_slope(scales, envt);
      if (sx >= 2.0 * p.s)
        return {false, fmt("sampled spatial growth exponent %.3g >= 2s = %.3g: lag integral diverges", sx, 2.0 * p.s)};
      if (st >= p.s)
        return {false, fmt("sampled growth into the past with exponent %.3g >= s = %.3g (time direction)", st, p.s)};
      return {true, fmt("sampled growth exponents: space %.3g, time %.3g", sx, st)};
    }

    struct PanelSum {
      double integral = 0.0;
      double max_abs = 0.0;
      double horizon = -1.0;
      double frozen = 0.0;
      double horizon_jump = 0.0;
      double unresolved_err = 0.0;   // from means accepted at the order cap
      long evals = 0;
    };

    // sum_i w_i P(r_i) over panels in increasing r, freezing P past the first unresolved lag
    PanelSum integrate_means(const std::vector<LagPanel>& panels, const MeanFn& mean, double u_at)
    {
      PanelSum out;
      std::vector<double> terms;
      int hint = 0;
      int resolved_count = 0;
      double prev = u_at, prev2 = u_at;
      for (const auto& pn : panels)
        for (std::size_t i = 0; i < pn.r.size(); ++i) {
          double P;
          if (out.horizon >= 0.0)
            P = out.frozen;
          else {
            MeanResult m = mean(pn.r[i], hint);
            out.evals += m.evals;
            // slow algebraic convergence (kinks) still gives usable means; aliasing does not
            const bool usable = !m.resolved && m.discrepancy <= 1e-2 * m.abs_scale;
            if (m.resolved || usable) {
              P = m.value;
              hint = m.order;
              prev2 = prev;
              prev = P;
              ++resolved_count;
              if (usable)
                out.unresolved_err += std::fabs(pn.w[i]) * m.discrepancy;
            } else {
              out.horizon = pn.r[i];
              out.frozen = prev;
              out.horizon_jump = resolved_count >= 2 ? std::fabs(prev - prev2) : std::fabs(m.value - u_at);
              P = prev;
            }
          }
          out.max_abs = std::max(out.max_abs, std::fabs(P));
          terms.push_back(pn.w[i] * P);
        }
      out.integral = pairwise_sum(terms);
      return out;
    }

    std::vector<LagPanel> build_panels(double rc, double end, bool floor, int ppd, double s, double rel_tol)
    {
      std::vector<LagPanel> panels;
      if (floor) {
        const double split = 0.5 * end;
        panels = log_panels(rc, split, ppd, -1.0 - s, rel_tol);
        panels.push_back(endpoint_panel(split, end, s, -1.0 - s, std::max(8, 2 * ppd)));
      } else {
        panels = log_panels(rc, end, ppd, -1.0 - s, rel_tol);
      }
      return panels;
    }

    // The lag engine behind every operator evaluation:
    //   |Gamma(-s)| value = inner + u_at int r^{-1-s} dr - int r^{-1-s} P_r dr + tail
    // poly_degree > 0: u grows like |x|^m, so u_at - P_r u ~ A r^{m/2} + B past r_max
    OperatorResult lag_engine(double s, double u_at, double T0, const InnerResult& inner, double rc,
                              const MeanFn& mean, const QuadratureSpec& spec, double poly_degree = 0.0)
    {
      const bool floor = std::isfinite(T0) && T0 < spec.r_max;
      const double end = floor ? T0 : spec.r_max;
      const double g = gamma_abs_neg_s(s);

      PanelSum a = integrate_means(build_panels(rc, end, floor, spec.panels_per_decade, s, spec.rel_tol),
                                   mean, u_at);
      double conv_err = 0.0;
      long evals = a.evals;
      if (spec.self_convergence) {
        PanelSum b = integrate_means(build_panels(rc, end, floor, 2 * spec.panels_per_decade, s, spec.rel_tol),
                                     mean, u_at);
        conv_err = std::fabs(a.integral - b.integral);
        evals += b.evals;
      }

      OperatorResult res;
      double poly_tail_err = 0.0;
      double constant_part = u_at * (std::pow(rc, -s) - std::pow(end, -s)) / s;
      double tail;
      if (floor) {
        tail = u_at * std::pow(T0, -s) / s;
      } else {
        double P_last;
        if (a.horizon >= 0.0)
          P_last = a.frozen;
        else {
          MeanResult m = mean(spec.r_max, 0);
          evals += m.evals;
          P_last = m.value;
        }
        tail = (u_at - P_last) * std::pow(spec.r_max, -s) / s;
        res.tail_bound = 2.0 * std::max(std::fabs(u_at), a.max_abs) * std::pow(spec.r_max, -s) / s / g;
        if (poly_degree > 0.0 && a.horizon < 0.0) {
          const double q = 0.5 * poly_degree;
          const double r1 = spec.r_max, r2 = 0.25 * spec.r_max;
          MeanResult m2 = mean(r2, 0);
          evals += m2.evals;
          const double D1 = u_at - P_last, D2 = u_at - m2.value;
          const double A = (D1 - D2) / (std::pow(r1, q) - std::pow(r2, q));
          const double B = D1 - A * std::pow(r1, q);
          const double grow = A * std::pow(r1, q - s) / (s - q);
          tail = grow + B * std::pow(r1, -s) / s;
          res.tail_bound = std::fabs(grow) / g + res.tail_bound;
          // misfit of the two-term model one step further in; lower-order terms only shrink outwards
          const double r3 = 0.25 * r2;
          MeanResult m3 = mean(r3, 0);
          evals += m3.evals;
          const double miss = std::fabs(u_at - m3.value - A * std::pow(r3, q) - B);
          poly_tail_err = miss * std::pow(r1, -s) / s;
        }
      }
      double horizon_err = 0.0;
      if (a.horizon >= 0.0) {
        res.horizon_lag = a.horizon;
        horizon_err = a.horizon_jump * std::pow(a.horizon, -s) / s;
      }

      double total = inner.extrapolated + constant_part - a.integral + tail;
      res.value = total / g;
      res.error_estimate = (inner.error + conv_err + horizon_err + a.unresolved_err + poly_tail_err) / g;
      res.evaluations = evals;
      double scale = std::max({std::fabs(res.value), std::fabs(u_at), a.max_abs, 1e-300});
      res.low_confidence = res.error_estimate > 10.0 * spec.rel_tol * scale;
      return res;
    }

  }

  Admissibility check_admissible(const FracParams& p, const FieldHandle& u, double t)
  {
    const Growth& g = u.growth;
    switch (g.kind) {
    case GrowthKind::Bounded:
      return {true, "bounded: lag integrand decays like r^{-1-s}"};
    case GrowthKind::Affine:
      return {true, "affine in x and constant in t: Gaussian means reproduce it, the integrand vanishes"};
    case GrowthKind::Polynomial:
      if (g.rate < 2.0 * p.s)
        return {true, fmt("spatial growth |x|^%g with %g < 2s: lag integrand decays", g.rate, g.rate)};
      return {false, fmt("spatial growth |x|^%g needs degree < 2s = %g (integrand ~ r^{m/2-1-s} at large lag)",
                         g.rate, 2.0 * p.s)};
    case GrowthKind::TimePolynomial:
      if (g.rate < p.s)
        return {true, fmt("growth |t|^%g into the past with %g < s", g.rate, g.rate)};
      return {false, fmt("time direction: growth |t|^%g into the past needs degree < s = %g "
                         "(tail integral of r^{m-1-s} diverges)", g.rate, p.s)};
    case GrowthKind::ExponentialInTime:
      if (g.rate >= 0.0)
        return {true, fmt("exponential-in-time rate %g >= 0 decays into the past", g.rate)};
      return {false, fmt("time direction: rate %g < 0 grows like e^{%g r} into the past", g.rate, -g.rate)};
    case GrowthKind::SpatialGaussian:
      if (g.rate <= 0.0)
        return {true, "spatial Gaussian with non-positive rate is bounded"};
      return {false, fmt("spatial growth e^{%g |x|^2}: the Gaussian mean diverges once r > %g", g.rate,
                         0.25 / g.rate)};
    case GrowthKind::Custom:
      return sample_growth(p, u, t);
    }
    return {false, "unknown growth tag"};
  }

  OperatorResult apply_master(const FracParams& p, const FieldHandle& u, std::span<const double> x,
                              double t, const QuadratureSpec& spec)
  {
    spec.validate();
    if (static_cast<int>(x.size()) != p.n || u.n != p.n)
      throw ArgumentError("apply_master: dimension mismatch");
    auto adm = check_admissible(p, u, t);
    if (!adm.pass)
      throw AdmissibilityError("field not admissible: " + adm.diagnostic);

    double T0 = std::numeric_limits<double>::infinity();
    if (u.time_floor) {
      T0 = t - *u.time_floor;
      if (T0 <= 0.0)
        return {};
    }
    const double rc = std::min(spec.r_cut, 0.25 * T0);
    const double u_at = u.eval(x, t);
    if (!std::isfinite(u_at))
      throw DomainError("apply_master: field value is not finite at the evaluation point");

    MeanFn mean = [&](double r, int hint) { return spatial_mean(u, x, t - r, r, spec, hint); };
    InnerResult inner = inner_from_heat(heat_operator_fd(u, x, t), u_at, rc, p.s, mean, spec);
    const double poly = u.growth.kind == GrowthKind::Polynomial ? u.growth.rate : 0.0;
    OperatorResult res = lag_engine(p.s, u_at, T0, inner, rc, mean, spec, poly);
    res.evaluations += 4 * p.n + 3;
    if (!std::isfinite(res.value))
      throw DomainError("apply_master: non-finite result (field evaluation failure?)");
    return res;
  }

  OperatorResult apply_marchaud(double s, const std::function<double(double)>& u, double t,
                                const QuadratureSpec& spec)
  {
    spec.validate();
    gamma_abs_neg_s(s);
    const double u_at = u(t);
    if (!std::isfinite(u_at))
      throw DomainError("apply_marchaud: value is not finite at t");
    // growth into the past, sampled on a dyadic ladder
    {
      FieldHandle lift = lift_space_independent(1, u, Growth::custom());
      auto adm = check_admissible(FracParams::make(1, s), lift, t);
      if (!adm.pass)
        throw AdmissibilityError("growth violation: " + adm.diagnostic);
    }
    const double k = 1e-4 * std::max(1.0, std::fabs(t));
    const double du = (3.0 * u_at - 4.0 * u(t - k) + u(t - 2.0 * k)) / (2.0 * k);
    MeanFn mean = [&](double r, int) {
      MeanResult m;
      m.value = u(t - r);
      m.abs_scale = std::fabs(m.value);
      m.evals = 1;
      return m;
    };
    InnerResult inner = inner_from_heat(du, u_at, spec.r_cut, s, mean, spec);
    return lag_engine(s, u_at, std::numeric_limits<double>::infinity(), inner, spec.r_cut, mean, spec);
  }

  OperatorResult apply_frac_laplacian(const FracParams& p, const std::function<double(std::span<const double>)>& g,
                                      std::span<const double> x, const QuadratureSpec& spec, Growth growth)
  {
    FieldHandle u = lift_time_independent(p.n, g, growth, "spatial");
    return apply_master(p, u, x, 0.0, spec);
  }

  double symbol_integral(double a, double s, const QuadratureSpec& spec)
  {
    spec.validate();
    const double g = gamma_abs_neg_s(s);
    // inner piece by its exact series sum_k (-1)^{k+1} a^k rc^{k-s}/(k!(k-s))
    const double rc = spec.r_cut;
    double inner = 0.0, term = 1.0;
    for (int k = 1; k < 60; ++k) {
      term *= a * rc / k;
      double add = (k % 2 ? 1.0 : -1.0) * term / (k - s) * std::pow(rc, -s);
      inner += add;
      if (std::fabs(add) < 1e-18 * std::fabs(inner))
        break;
    }
    std::vector<double> terms;
    for (const auto& pn : time_lag_panels(spec, s))
      for (std::size_t i = 0; i < pn.r.size(); ++i)
        terms.push_back(pn.w[i] * (1.0 - std::exp(-a * pn.r[i])));
    double tail = (1.0 - std::exp(-a * spec.r_max)) * std::pow(spec.r_max, -s) / s;
    return (inner + pairwise_sum(terms) + tail) / g;
  }

}
