#include "fracheat/rescale.h"
#include "fracheat/errors.h"
#include "fracheat/regularity.h"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fracheat {

  using nlohmann::json;

  void BlowupProblem::validate() const
  {
    if (n < 1)
      throw ConfigError("blowup problem: n must be >= 1");
    if (!(p > 1.0) || !std::isfinite(p))
      throw ConfigError("blowup problem: p must be > 1");
    if (!(q >= 0.0) || !std::isfinite(q))
      throw ConfigError("blowup problem: q must be >= 0");
    if (!(s > 0.0 && s < 1.0))
      throw ConfigError("blowup problem: s must lie in (0,1)");
    if (!(C0 > 0.0))
      throw ConfigError("blowup problem: C0 must be positive");
    if (!(Kbar > 0.0))
      throw ConfigError("blowup problem: Kbar must be positive");
  }

  void BlowupProblem::validate_height_regime() const
  {
    validate();
    const double upper = (n + 2.0) / (n + 2.0 - 2.0 * s);
    if (!(p < upper)) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "blowup problem: p = %g outside 1 < p < (n+2)/(n+2-2s) = %g (n = %d, s = %g)",
                    p, upper, n, s);
      throw AdmissibilityError(buf);
    }
  }

  void BlowupProblem::validate_gradient_regime() const
  {
    validate_height_regime();
    if (!(s > 0.5))
      throw AdmissibilityError("blowup problem: the gradient regime needs s > 1/2");
    const double qc = 2.0 * s * p / (2.0 * s + p - 1.0);
    if (!(q > 0.0 && q < qc)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "blowup problem: q = %g outside 0 < q < 2sp/(2s+p-1) = %g", q, qc);
      throw AdmissibilityError(buf);
    }
  }

  std::string to_string(BlowupVariant v)
  {
    return v == BlowupVariant::Height ? "height" : "height-plus-gradient";
  }

  ExponentTable scaling_exponent_table(const BlowupProblem& prob)
  {
    prob.validate();
    const double s = prob.s, p = prob.p, q = prob.q;
    ExponentTable e;
    e.two_s_over_pm1 = 2.0 * s / (p - 1.0);
    e.pm1_over_two_s = (p - 1.0) / (2.0 * s);
    e.two_sp_over_pm1 = 2.0 * s * p / (p - 1.0);
    e.gradient_term = (2.0 * s * p - (2.0 * s + p - 1.0) * q) / (p - 1.0);
    e.gradient_bound = 2.0 * s / (2.0 * s + p - 1.0);
    e.q_critical = 2.0 * s * p / (2.0 * s + p - 1.0);
    e.critical = std::fabs(q - e.q_critical) <= 1e-12 * std::max(1.0, e.q_critical);
    if (e.critical)
      e.gradient_term = 0.0;
    e.gradient_term_vanishes = !e.critical && e.gradient_term > 0.0;
    e.p_upper = (prob.n + 2.0) / (prob.n + 2.0 - 2.0 * s);
    e.p_admissible = p > 1.0 && p < e.p_upper;
    return e;
  }

  namespace {

    double st_dist(std::span<const double> x, double t, const SpaceTimePoint& c)
    {
      double d = (t - c.t) * (t - c.t);
      for (std::size_t i = 0; i < c.x.size(); ++i)
        d += (x[i] - c.x[i]) * (x[i] - c.x[i]);
      return std::sqrt(d);
    }

    // M = u^{(p-1)/2s} + |grad u|^{(p-1)/(2s+p-1)} at every node
    GridField gradient_measure(const GridField& u, const BlowupProblem& prob)
    {
      const double e1 = (prob.p - 1.0) / (2.0 * prob.s);
      const double e2 = (prob.p - 1.0) / (2.0 * prob.s + prob.p - 1.0);
      std::vector<GridField> du;
      for (int a = 0; a < u.n(); ++a)
        du.push_back(grid_derivative(u, Derivative::Dx, a));
      GridField M = GridField::like(u, u.name + "_M");
      for (std::size_t i = 0; i < u.values.size(); ++i) {
        double g2 = 0.0;
        for (const auto& d : du)
          g2 += d.values[i] * d.values[i];
        M.values[i] = std::pow(std::max(u.values[i], 0.0), e1) + std::pow(std::sqrt(g2), e2);
      }
      return M;
    }

    void check_dims(const GridField& u, const SpaceTimePoint& X, const BlowupProblem& prob)
    {
      u.validate();
      if (u.n() != prob.n)
        throw ArgumentError("rescale: grid dimension does not match the problem's n");
      if (static_cast<int>(X.x.size()) != prob.n)
        throw ArgumentError("rescale: blow-up point has the wrong dimension");
    }

    bool box_covers(const GridField& u, const SpaceTimePoint& c, double rx, double rt)
    {
      const auto ok = [](const Axis& a, double lo, double hi) {
        const double slack = 1e-9 * std::max({1.0, std::fabs(a.min), std::fabs(a.max)});
        return a.min <= lo + slack && a.max >= hi - slack;
      };
      for (int a = 0; a < u.n(); ++a)
        if (!ok(u.axes[a], c.x[a] - rx, c.x[a] + rx))
          return false;
      return ok(u.time_axis, c.t - rt, c.t + rt);
    }

  }

  RescaleResult select_blowup_point(const GridField& u, const SpaceTimePoint& X_k, double R, const BlowupProblem& prob,
                                    BlowupVariant variant)
  {
    prob.validate();
    check_dims(u, X_k, prob);
    if (!(R > 0.0) || !std::isfinite(R))
      throw ArgumentError("rescale: R must be positive");
    const bool grad = variant == BlowupVariant::HeightPlusGradient;
    const double gamma = 2.0 * prob.s / (prob.p - 1.0);
    const double e1 = (prob.p - 1.0) / (2.0 * prob.s);

    // the quantity whose growth drives the selection: u itself, or M
    const GridField W = grad ? gradient_measure(u, prob) : u;
    for (double v : u.values)
      if (v < 0.0)
        throw ArgumentError("rescale: u must be nonnegative on the grid");

    RescaleResult r;
    r.variant = variant;
    r.X_k = X_k;
    r.value_at_X = W.interpolate(X_k.x, X_k.t);
    if (!(r.value_at_X > 0.0))
      throw ArgumentError("rescale: u (or M) must be positive at the blow-up point");
    r.R_k = grad ? 2.0 * R / r.value_at_X : 2.0 * R * std::pow(r.value_at_X, -e1);
    if (!box_covers(u, X_k, r.R_k, r.R_k))
      throw ArgumentError("rescale: the grid does not cover B_{R_k}(X_k)");

    const auto S_of = [&](double w, double dist) {
      const double gap = r.R_k - dist;
      if (!(gap > 0.0))
        return -1.0;
      return grad ? std::pow(w * gap, gamma) : w * std::pow(gap, gamma);
    };

    // exhaustive scan, lowest index wins ties
    const std::size_t N = u.values.size();
    std::vector<double> S(N, -1.0);
    std::vector<double> x;
    double t;
    std::size_t best = N;
    double best_S = -1.0;
    for (std::size_t i = 0; i < N; ++i) {
      u.coords(i, x, t);
      S[i] = S_of(W.values[i], st_dist(x, t, X_k));
      if (S[i] > best_S) {
        best_S = S[i];
        best = i;
      }
    }
    // X_k itself competes, so S(A_k) >= S(X_k) and the radius inequality follows
    const double S_X = S_of(r.value_at_X, 0.0);
    if (best == N)
      throw ArgumentError("rescale: no grid node inside B_{R_k}(X_k)");

    SpaceTimePoint A;
    u.coords(best, A.x, A.t);
    double WA;
    r.A_node = best;

    // one quadratic step per axis from the winning node
    {
      std::vector<int> ix;
      int k;
      u.unravel(best, ix, k);
      SpaceTimePoint cand = A;
      bool moved = false;
      const int dims = u.n() + 1;
      for (int d = 0; d < dims; ++d) {
        const Axis& ax = d < u.n() ? u.axes[d] : u.time_axis;
        int& idx = d < u.n() ? ix[d] : k;
        if (idx <= 0 || idx >= ax.steps - 1)
          continue;
        const int save = idx;
        idx = save - 1;
        const double Sm = S[u.index(ix, k)];
        idx = save + 1;
        const double Sp = S[u.index(ix, k)];
        idx = save;
        if (Sm < 0.0 || Sp < 0.0)
          continue;
        const double den = Sm - 2.0 * best_S + Sp;
        if (!(den < 0.0))
          continue;
        const double h = ax.spacing();
        const double delta = std::clamp(0.5 * h * (Sm - Sp) / den, -0.5 * h, 0.5 * h);
        if (delta == 0.0)
          continue;
        (d < u.n() ? cand.x[d] : cand.t) += delta;
        moved = true;
      }
      if (moved) {
        const double Wc = W.interpolate(cand.x, cand.t);
        const double Sc = S_of(Wc, st_dist(cand.x, cand.t, X_k));
        const double lam = grad ? 1.0 / Wc : std::pow(Wc, -e1);
        if (Sc > best_S && Wc > 0.0 && 2.0 * R * lam <= r.R_k - st_dist(cand.x, cand.t, X_k)) {
          A = cand;
          best_S = Sc;
          r.refined = true;
        }
      }
    }
    if (S_X > best_S) {
      A = X_k;
      best_S = S_X;
      r.refined = true;
    }

    // the same interpolation call rescale_field makes at the origin, so v_k(0,0) is x/x
    WA = W.interpolate(A.x, A.t);
    r.A_k = A;
    r.S_max = best_S;
    r.value_at_A = WA;
    r.lambda_k = grad ? 1.0 / WA : std::pow(WA, -e1);
    if (grad) {
      // normalizing height M(A)^{2s/(p-1)}
      r.m_k = std::pow(WA, gamma);
    } else {
      r.m_k = WA;
    }

    const double dAX = st_dist(A.x, A.t, X_k);
    r.radius_lhs = 2.0 * R * r.lambda_k;
    r.radius_rhs = r.R_k - dAX;
    r.radius_defect = std::max(0.0, r.radius_lhs - r.radius_rhs);
    r.radius_ok = r.radius_defect <= 1e-12 * r.R_k;

    // inequality chain over nodes of B_{R lambda}(A)
    const double rad = R * r.lambda_k;
    const double ceiling = grad ? 2.0 : std::pow(2.0, gamma);
    for (std::size_t i = 0; i < N; ++i) {
      u.coords(i, x, t);
      if (st_dist(x, t, A) >= rad)
        continue;
      ++r.chain_nodes;
      const double dX = st_dist(x, t, X_k);
      r.chain_defect = std::max(r.chain_defect, (r.R_k - dAX) - 2.0 * (r.R_k - dX));
      r.doubling_defect = std::max(r.doubling_defect, W.values[i] / WA - ceiling);
    }
    r.chain_ok = r.chain_defect <= 1e-12 * r.R_k && r.doubling_defect <= 1e-9 * ceiling;
    r.bound = ceiling;
    return r;
  }

  void rescale_field(const GridField& u, RescaleResult& res, double R, const BlowupProblem& prob, int steps_x,
                     int steps_t)
  {
    prob.validate();
    check_dims(u, res.A_k, prob);
    if (!(res.lambda_k > 0.0) || !(res.m_k > 0.0))
      throw ArgumentError("rescale: run the point selection first");
    if (steps_x < 3 || steps_t < 3)
      throw ArgumentError("rescale: at least 3 steps per axis");
    steps_x |= 1;
    steps_t |= 1;
    const bool grad = res.variant == BlowupVariant::HeightPlusGradient;
    const double lam = res.lambda_k;
    const double Rb = R / std::sqrt(prob.n + 1.0);
    if (!box_covers(u, res.A_k, Rb * lam, Rb * Rb * lam * lam))
      throw ArgumentError("rescale: Q_{R lambda_k/sqrt(n+1)}(A_k) is not inside the sampled domain");

    std::vector<Axis> axes(prob.n, Axis{-Rb, Rb, steps_x});
    GridField v = GridField::make("v_k", axes, Axis{-Rb * Rb, Rb * Rb, steps_t});
    GridField c;
    GridField M;
    if (grad) {
      M = gradient_measure(u, prob);
      c = GridField::make("v_k_combined", axes, v.time_axis);
    }
    const ParabolicCylinder Q = ParabolicCylinder::parabolic(std::vector<double>(prob.n, 0.0), 0.0, Rb);

    std::vector<double> y, x(prob.n);
    double t;
    double vmax = 0.0;
    for (std::size_t i = 0; i < v.values.size(); ++i) {
      v.coords(i, y, t);
      for (int a = 0; a < prob.n; ++a)
        x[a] = lam * y[a] + res.A_k.x[a];
      const double tt = lam * lam * t + res.A_k.t;
      v.values[i] = u.interpolate(x, tt) / res.m_k;
      if (grad)
        c.values[i] = M.interpolate(x, tt) / res.value_at_A;
      if (node_in_cylinder(Q, y, t))
        vmax = std::max(vmax, grad ? c.values[i] : v.values[i]);
    }

    std::vector<int> mid(prob.n, steps_x / 2);
    const std::size_t origin = v.index(mid, steps_t / 2);
    res.origin_value = grad ? c.values[origin] : v.values[origin];
    res.max_value = vmax;
    res.R_bar = Rb;
    res.ceiling_ok = vmax <= res.bound + 1e-3;
    res.v_k = std::move(v);
    res.combined = std::move(c);
    res.rescaled = true;
    if (res.origin_value != 1.0) {
      char buf[120];
      std::snprintf(buf, sizeof buf, "rescale: normalization at the origin is %.17g, not 1", res.origin_value);
      throw InvariantError(buf);
    }
    if (!res.ceiling_ok) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "rescale: rescaled field reaches %.6g above the ceiling %.6g (selection bug)", vmax,
                    res.bound);
      throw InvariantError(buf);
    }
  }

  FieldHandle rescaled_field(const FieldHandle& u, const SpaceTimePoint& A, double lambda, double m)
  {
    if (!(lambda > 0.0) || !(m > 0.0))
      throw ArgumentError("rescaled_field: lambda and m must be positive");
    if (static_cast<int>(A.x.size()) != u.n)
      throw ArgumentError("rescaled_field: centre has the wrong dimension");
    const int n = u.n;
    const auto map_x = [A, lambda, n](std::span<const double> y) {
      std::vector<double> x(n);
      for (int a = 0; a < n; ++a)
        x[a] = lambda * y[a] + A.x[a];
      return x;
    };
    FieldHandle v;
    v.n = n;
    v.name = u.name.empty() ? "rescaled" : u.name + "_rescaled";
    v.concurrent_safe = u.concurrent_safe;
    v.eval = [u, map_x, A, lambda, m](std::span<const double> y, double t) {
      const auto x = map_x(y);
      return u.eval(x, lambda * lambda * t + A.t) / m;
    };
    if (u.heat_flow)
      v.heat_flow = [u, map_x, A, lambda, m](std::span<const double> y, double tau, double a) {
        const auto x = map_x(y);
        return u.heat_flow(x, lambda * lambda * tau + A.t, lambda * lambda * a) / m;
      };
    if (u.localize)
      v.localize = [u, A, lambda](double tau) -> std::optional<Localization> {
        auto L = u.localize(lambda * lambda * tau + A.t);
        if (!L)
          return std::nullopt;
        for (std::size_t a = 0; a < L->center.size(); ++a)
          L->center[a] = (L->center[a] - A.x[a]) / lambda;
        L->lag /= lambda * lambda;
        return L;
      };
    if (u.time_floor)
      v.time_floor = (*u.time_floor - A.t) / (lambda * lambda);
    if (u.support) {
      ParabolicCylinder c = *u.support;
      for (int a = 0; a < n; ++a)
        c.center_x[a] = (c.center_x[a] - A.x[a]) / lambda;
      c.radius /= lambda;
      c.t_lo = (c.t_lo - A.t) / (lambda * lambda);
      c.t_hi = (c.t_hi - A.t) / (lambda * lambda);
      v.support = c;
    }
    v.growth = u.growth;
    switch (u.growth.kind) {
    case GrowthKind::ExponentialInTime:
    case GrowthKind::SpatialGaussian:
      v.growth.rate *= lambda * lambda;
      break;
    default:
      break;
    }
    return v;
  }

  GridField synthetic_blowup_grid(const BlowupProblem& prob, double height, double R, const SpaceTimePoint& X,
                                  bool spike, int steps)
  {
    prob.validate();
    if (!(height > 0.0) || !(R > 0.0))
      throw ArgumentError("synthetic blowup: height and R must be positive");
    if (static_cast<int>(X.x.size()) != prob.n)
      throw ArgumentError("synthetic blowup: centre has the wrong dimension");
    steps |= 1;
    const double ell = std::pow(height, -(prob.p - 1.0) / (2.0 * prob.s));
    // radius of B_{R_k} in units of ell is 2R; pad the box a little
    const double half = 2.2 * R * ell;
    std::vector<Axis> axes;
    for (int a = 0; a < prob.n; ++a)
      axes.push_back(Axis{X.x[a] - half, X.x[a] + half, steps});
    GridField g = GridField::make("synthetic_blowup", axes, Axis{X.t - half, X.t + half, steps});

    // spike at a tenth of R_k from the centre along x1, width R/20
    const double sx = 0.2 * R, w = 0.05 * R;
    std::vector<double> x;
    double t;
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      g.coords(i, x, t);
      double r2 = (t - X.t) * (t - X.t);
      for (int a = 0; a < prob.n; ++a)
        r2 += (x[a] - X.x[a]) * (x[a] - X.x[a]);
      r2 /= ell * ell;
      double phi = 1.0 / (1.0 + r2);
      if (spike) {
        double d2 = r2 - (2.0 * (x[0] - X.x[0]) / ell) * sx + sx * sx;
        phi += 2.0 * std::exp(-d2 / (w * w));
      }
      g.values[i] = height * phi;
    }
    return g;
  }

  namespace {
    json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
    json point(const SpaceTimePoint& p) { return json{{"x", p.x}, {"t", num(p.t)}}; }
  }

  std::string rescale_json(const RescaleResult& r, const ExponentTable& e)
  {
    json j;
    j["variant"] = to_string(r.variant);
    j["X_k"] = point(r.X_k);
    j["value_at_X"] = num(r.value_at_X);
    j["R_k"] = num(r.R_k);
    j["A_k"] = point(r.A_k);
    j["A_node"] = r.A_node;
    j["refined"] = r.refined;
    j["S_max"] = num(r.S_max);
    j["value_at_A"] = num(r.value_at_A);
    j["lambda_k"] = num(r.lambda_k);
    j["m_k"] = num(r.m_k);
    j["radius_inequality"] = json{{"lhs", num(r.radius_lhs)}, {"rhs", num(r.radius_rhs)},
                                  {"defect", num(r.radius_defect)}, {"ok", r.radius_ok}};
    j["chain"] = json{{"nodes", r.chain_nodes}, {"distance_defect", num(r.chain_defect)},
                      {"doubling_defect", num(r.doubling_defect)}, {"ok", r.chain_ok}};
    j["bound"] = num(r.bound);
    if (r.rescaled)
      j["rescaled"] = json{{"R_bar", num(r.R_bar)}, {"origin_value", num(r.origin_value)},
                           {"max_value", num(r.max_value)}, {"ceiling_ok", r.ceiling_ok}};
    j["exponents"] = json{{"2s/(p-1)", num(e.two_s_over_pm1)},
                          {"(p-1)/(2s)", num(e.pm1_over_two_s)},
                          {"2sp/(p-1)", num(e.two_sp_over_pm1)},
                          {"gradient_term", num(e.gradient_term)},
                          {"gradient_bound", num(e.gradient_bound)},
                          {"q_critical", num(e.q_critical)},
                          {"gradient_term_vanishes", e.gradient_term_vanishes},
                          {"critical", e.critical},
                          {"p_upper", num(e.p_upper)},
                          {"p_admissible", e.p_admissible}};
    return j.dump(2);
  }

}
