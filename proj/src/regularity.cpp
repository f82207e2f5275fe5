#include "fracheat/regularity.h"
#include "fracheat/errors.h"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace fracheat {

  using nlohmann::json;

  std::string to_string(HolderMode m)
  {
    switch (m) {
    case HolderMode::Holder: return "holder";
    case HolderMode::LogLipschitz: return "log-lipschitz";
    case HolderMode::OnePlusLog: return "one-plus-log";
    case HolderMode::Schauder: return "schauder";
    }
    return "holder";
  }

  HolderMode holder_mode_from_string(const std::string& s)
  {
    if (s == "holder")
      return HolderMode::Holder;
    if (s == "log-lipschitz")
      return HolderMode::LogLipschitz;
    if (s == "one-plus-log")
      return HolderMode::OnePlusLog;
    if (s == "schauder")
      return HolderMode::Schauder;
    throw ConfigError("unknown holder mode '" + s + "' (holder, log-lipschitz, one-plus-log, schauder)");
  }

  void HolderSpec::validate() const
  {
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw ConfigError("holder spec: alpha must lie in (0,1]");
    if (pair_budget < 1000)
      throw ConfigError("holder spec: pair_budget must be >= 1000");
    if (min_sep < 0.0)
      throw ConfigError("holder spec: min_sep must be >= 0");
    if (mode == HolderMode::Schauder && !(s > 0.0 && s < 1.0))
      throw ConfigError("holder spec: s must lie in (0,1)");
    if (!(time_alpha > 0.0 && time_alpha <= 1.0))
      throw ConfigError("holder spec: time_alpha must lie in (0,1]");
    if (min_bins < 1)
      throw ConfigError("holder spec: min_bins must be >= 1");
  }

  bool node_in_cylinder(const ParabolicCylinder& Q, std::span<const double> x, double t)
  {
    const double r2 = Q.radius * Q.radius;
    const double tslack = 1e-12 * std::max(1.0, std::max(std::fabs(Q.t_lo), std::fabs(Q.t_hi)));
    return Q.dist2(x) <= r2 * (1.0 + 1e-12) && t >= Q.t_lo - tslack && t <= Q.t_hi + tslack;
  }

  GridField grid_derivative(const GridField& u, Derivative d, int axis, int axis2)
  {
    if (d == Derivative::None)
      return u;
    if (d == Derivative::Dxx) {
      GridField a = grid_derivative(u, Derivative::Dx, axis2);
      return grid_derivative(a, Derivative::Dx, axis);
    }
    const int n = u.n();
    const bool in_time = (d == Derivative::Dt);
    if (!in_time && (axis < 0 || axis >= n))
      throw ArgumentError("grid_derivative: axis out of range");
    const Axis& ax = in_time ? u.time_axis : u.axes[axis];
    GridField out = GridField::like(u, u.name + (in_time ? "_t" : "_x" + std::to_string(axis + 1)));
    if (ax.steps < 3) {
      // not enough nodes for a difference that is at least second order
      std::fill(out.values.begin(), out.values.end(), 0.0);
      return out;
    }
    const double h = ax.spacing();
    const int N = ax.steps;
    std::size_t stride = 1;
    if (in_time)
      stride = u.spatial_count();
    else
      for (int k = 0; k < axis; ++k)
        stride *= u.axes[k].steps;
    std::vector<int> ix;
    int kt;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
      u.unravel(i, ix, kt);
      const int j = in_time ? kt : ix[axis];
      auto at = [&](int off) { return u.values[i + static_cast<std::ptrdiff_t>(off) * static_cast<std::ptrdiff_t>(stride)]; };
      double v;
      if (j >= 2 && j <= N - 3)
        v = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
      else if (j >= 1 && j <= N - 2)
        v = (at(1) - at(-1)) / (2.0 * h);
      else if (j == 0)
        v = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
      else
        v = (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h);
      out.values[i] = v;
    }
    return out;
  }

  namespace {

    constexpr double kEq = 1e-9;

    struct Mask {
      std::vector<char> in;
      std::vector<int> lo, hi;   // index box of the mask, spatial axes then time
      std::size_t count = 0;
    };

    Mask make_mask(const GridField& g, const ParabolicCylinder& Q)
    {
      if (Q.n() != g.n())
        throw ArgumentError("cylinder dimension does not match the grid");
      Mask m;
      const int n = g.n();
      m.in.assign(g.values.size(), 0);
      m.lo.assign(n + 1, std::numeric_limits<int>::max());
      m.hi.assign(n + 1, -1);
      std::vector<double> x;
      double t;
      std::vector<int> ix;
      int k;
      for (std::size_t i = 0; i < g.values.size(); ++i) {
        g.coords(i, x, t);
        if (!node_in_cylinder(Q, x, t))
          continue;
        m.in[i] = 1;
        ++m.count;
        g.unravel(i, ix, k);
        for (int d = 0; d < n; ++d) {
          m.lo[d] = std::min(m.lo[d], ix[d]);
          m.hi[d] = std::max(m.hi[d], ix[d]);
        }
        m.lo[n] = std::min(m.lo[n], k);
        m.hi[n] = std::max(m.hi[n], k);
      }
      if (m.count == 0)
        throw ArgumentError("no grid nodes inside the cylinder");
      return m;
    }

    double modulus(const HolderComponent& c, double d)
    {
      if (c.modulus == Modulus::Power)
        return std::pow(d, c.exponent);
      return d * std::fabs(std::log(std::min(d, 0.5)));
    }

    // distance of an index offset (spatial offsets then the time offset)
    double offset_distance(const GridField& g, const HolderComponent& c, std::span<const int> off)
    {
      const int n = g.n();
      double dx2 = 0.0;
      for (int d = 0; d < n; ++d) {
        const double v = off[d] * g.axes[d].spacing();
        dx2 += v * v;
      }
      const double dt = std::fabs(off[n] * g.time_axis.spacing());
      switch (c.pairs) {
      case PairKind::Joint: return std::sqrt(dx2) + std::sqrt(dt);
      case PairKind::Space: return std::sqrt(dx2);
      case PairKind::Time: return c.sqrt_time ? std::sqrt(dt) : dt;
      }
      return 0.0;
    }

    std::ptrdiff_t flat_shift(const GridField& g, std::span<const int> off)
    {
      std::ptrdiff_t s = off[g.n()];
      for (int d = g.n() - 1; d >= 0; --d)
        s = s * g.axes[d].steps + off[d];
      return s;
    }

    // visit every multi-index in [lo, hi] (inclusive), odometer order
    template <class F>
    void for_box(const std::vector<int>& lo, const std::vector<int>& hi, F&& f)
    {
      const std::size_t m = lo.size();
      for (std::size_t d = 0; d < m; ++d)
        if (hi[d] < lo[d])
          return;
      std::vector<int> ix = lo;
      for (;;) {
        f(ix);
        std::size_t d = 0;
        for (; d < m; ++d) {
          if (++ix[d] <= hi[d])
            break;
          ix[d] = lo[d];
        }
        if (d == m)
          return;
      }
    }

    std::size_t flat_of(const GridField& g, std::span<const int> ix)
    {
      std::size_t f = static_cast<std::size_t>(ix[g.n()]);
      for (int d = g.n() - 1; d >= 0; --d)
        f = f * g.axes[d].steps + ix[d];
      return f;
    }

    struct Offset {
      std::vector<int> off;
      double dist;
      double count;   // pairs inside the index box (upper bound on valid pairs)
    };

    void scan_component(const GridField& vals, const Mask& mask, HolderComponent& c, const HolderSpec& spec)
    {
      const int n = vals.n();
      std::vector<int> span(n + 1);
      for (int d = 0; d <= n; ++d)
        span[d] = mask.hi[d] - mask.lo[d];

      // offsets of this pair family, each pair once
      std::vector<int> olo(n + 1), ohi(n + 1);
      for (int d = 0; d < n; ++d) {
        const bool moves = c.pairs != PairKind::Time;
        olo[d] = moves ? -span[d] : 0;
        ohi[d] = moves ? span[d] : 0;
      }
      olo[n] = 0;
      ohi[n] = (c.pairs == PairKind::Space) ? 0 : span[n];
      std::vector<Offset> offs;
      double dmin = std::numeric_limits<double>::infinity();
      for_box(olo, ohi, [&](const std::vector<int>& o) {
        // positive: time offset > 0, or zero time offset and first nonzero spatial offset > 0
        bool pos = o[n] > 0;
        if (o[n] == 0)
          for (int d = n - 1; d >= 0; --d)
            if (o[d] != 0) {
              pos = o[d] > 0;
              break;
            }
        if (!pos)
          return;
        if (c.pairs == PairKind::Time && o[n] == 0)
          return;
        Offset of{o, offset_distance(vals, c, o), 1.0};
        if (!(of.dist > 0.0) || of.dist < spec.min_sep)
          return;
        for (int d = 0; d <= n; ++d)
          of.count *= (span[d] + 1 - std::abs(o[d]));
        dmin = std::min(dmin, of.dist);
        offs.push_back(std::move(of));
      });
      c.bins.clear();
      c.seminorm = 0.0;
      c.pair_count = 0;
      c.witness.reset();
      c.effective_exponent = std::numeric_limits<double>::quiet_NaN();
      if (offs.empty())
        return;

      std::map<int, std::vector<const Offset*>> bins;
      for (const auto& o : offs)
        bins[static_cast<int>(std::floor(std::log2(o.dist / dmin) + 1e-12))].push_back(&o);
      double total = 0.0;
      for (const auto& o : offs)
        total += o.count;
      const bool sample_any = total > static_cast<double>(spec.pair_budget);
      const double per_bin = static_cast<double>(spec.pair_budget) / bins.size();

      double best = -1.0;
      std::size_t bp1 = 0, bp2 = 0;
      double bdist = 0.0, binc = 0.0;
      std::vector<BinStat> stats;

      auto visit = [&](std::size_t p1, std::size_t p2, double dist, BinStat& st) {
        const double inc = std::fabs(vals.values[p1] - vals.values[p2]);
        ++st.pairs;
        if (inc > st.increment || st.pairs == 1) {
          st.increment = inc;
          st.distance = dist;
        }
        const double r = inc / modulus(c, dist);
        if (r > best) {
          best = r;
          bp1 = p1;
          bp2 = p2;
          bdist = dist;
          binc = inc;
        }
      };

      for (const auto& [b, list] : bins) {
        BinStat st;
        double bin_total = 0.0;
        for (const Offset* o : list)
          bin_total += o->count;
        const bool sample = sample_any && bin_total > per_bin;
        if (!sample) {
          for (const Offset* o : list) {
            std::vector<int> blo(n + 1), bhi(n + 1);
            for (int d = 0; d <= n; ++d) {
              blo[d] = std::max(mask.lo[d], mask.lo[d] - o->off[d]);
              bhi[d] = std::min(mask.hi[d], mask.hi[d] - o->off[d]);
            }
            const std::ptrdiff_t sh = flat_shift(vals, o->off);
            for_box(blo, bhi, [&](const std::vector<int>& ix) {
              const std::size_t p1 = flat_of(vals, ix);
              const std::size_t p2 = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p1) + sh);
              if (mask.in[p1] && mask.in[p2])
                visit(p1, p2, o->dist, st);
            });
          }
        } else {
          c.sampled = true;
          std::mt19937_64 rng(static_cast<unsigned long long>(spec.seed) * 1000003ULL + static_cast<unsigned long long>(b + 4096));
          std::vector<double> w;
          for (const Offset* o : list)
            w.push_back(o->count);
          std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
          const long draws = static_cast<long>(per_bin);
          std::vector<int> ix(n + 1);
          for (long k = 0; k < draws; ++k) {
            const Offset* o = list[pick(rng)];
            for (int d = 0; d <= n; ++d) {
              const int lo = std::max(mask.lo[d], mask.lo[d] - o->off[d]);
              const int hi = std::min(mask.hi[d], mask.hi[d] - o->off[d]);
              ix[d] = std::uniform_int_distribution<int>(lo, hi)(rng);
            }
            const std::size_t p1 = flat_of(vals, ix);
            const std::size_t p2 = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p1) + flat_shift(vals, o->off));
            if (mask.in[p1] && mask.in[p2])
              visit(p1, p2, o->dist, st);
          }
        }
        if (st.pairs > 0)
          stats.push_back(st);
        c.pair_count += st.pairs;
      }
      c.bins = stats;
      if (best >= 0.0) {
        c.seminorm = best;
        Witness w;
        w.component = c.name;
        w.node1 = bp1;
        w.node2 = bp2;
        vals.coords(bp1, w.x1, w.t1);
        vals.coords(bp2, w.x2, w.t2);
        w.increment = binc;
        w.distance = bdist;
        w.ratio = best;
        c.witness = w;
      }
      // least-squares slope of log max-increment against log distance
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int m = 0;
      for (const auto& st : stats)
        if (st.increment > 0.0) {
          const double lx = std::log(st.distance), ly = std::log(st.increment);
          sx += lx;
          sy += ly;
          sxx += lx * lx;
          sxy += lx * ly;
          ++m;
        }
      if (m >= 2) {
        const double den = m * sxx - sx * sx;
        if (den > 0.0)
          c.effective_exponent = (m * sxy - sx * sy) / den;
      }
    }

    HolderComponent comp(std::string name, Derivative d, int axis, PairKind pk, Modulus mod, double e,
                         bool sqrt_time = false, int axis2 = 0)
    {
      HolderComponent c;
      c.name = std::move(name);
      c.derivative = d;
      c.axis = axis;
      c.axis2 = axis2;
      c.pairs = pk;
      c.modulus = mod;
      c.exponent = e;
      c.sqrt_time = sqrt_time;
      return c;
    }

    std::string ax_name(int d) { return "x" + std::to_string(d + 1); }

    struct Plan {
      std::string case_name;
      std::vector<HolderComponent> comps;
      bool grad_sup = false, second_sup = false;
    };

    // components of C^{2b, b} by the three definition cases
    Plan plan_holder(double b, int n)
    {
      Plan p;
      if (b <= 0.5 + kEq) {
        p.case_name = "holder(i)";
        p.comps.push_back(comp("u_joint", Derivative::None, 0, PairKind::Joint, Modulus::Power, 2.0 * b));
      } else if (b <= 1.0 + kEq) {
        p.case_name = "holder(ii)";
        p.grad_sup = true;
        for (int d = 0; d < n; ++d)
          p.comps.push_back(comp("grad_" + ax_name(d) + "_space", Derivative::Dx, d, PairKind::Space,
                                 Modulus::Power, 2.0 * b - 1.0));
        p.comps.push_back(comp("u_time", Derivative::None, 0, PairKind::Time, Modulus::Power, b));
        for (int d = 0; d < n; ++d)
          p.comps.push_back(comp("grad_" + ax_name(d) + "_time", Derivative::Dx, d, PairKind::Time,
                                 Modulus::Power, b - 0.5));
      } else {
        p.case_name = "holder(iii)";
        p.grad_sup = p.second_sup = true;
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j)
            p.comps.push_back(comp("hess_" + ax_name(i) + ax_name(j) + "_joint", Derivative::Dxx, i,
                                   PairKind::Joint, Modulus::Power, 2.0 * b - 2.0, false, j));
        p.comps.push_back(comp("dt_joint", Derivative::Dt, 0, PairKind::Joint, Modulus::Power, 2.0 * b - 2.0));
      }
      return p;
    }

    Plan plan_loglip(double time_alpha)
    {
      Plan p;
      p.case_name = "log-lipschitz";
      p.comps.push_back(comp("u_space_logL", Derivative::None, 0, PairKind::Space, Modulus::LogLipschitz, 1.0));
      p.comps.push_back(comp("u_time", Derivative::None, 0, PairKind::Time, Modulus::Power, time_alpha));
      return p;
    }

    Plan plan_oneplus(int n)
    {
      Plan p;
      p.case_name = "one-plus-log";
      p.grad_sup = true;
      for (int d = 0; d < n; ++d)
        p.comps.push_back(comp("grad_" + ax_name(d) + "_space_logL", Derivative::Dx, d, PairKind::Space,
                               Modulus::LogLipschitz, 1.0));
      p.comps.push_back(comp("u_time_logL", Derivative::None, 0, PairKind::Time, Modulus::LogLipschitz, 1.0, true));
      return p;
    }

    Plan plan_for(const HolderSpec& spec, int n)
    {
      switch (spec.mode) {
      case HolderMode::Holder:
        return plan_holder(spec.alpha, n);
      case HolderMode::LogLipschitz:
        return plan_loglip(spec.time_alpha);
      case HolderMode::OnePlusLog:
        return plan_oneplus(n);
      case HolderMode::Schauder: {
        const double two_b = 2.0 * spec.s + spec.alpha;
        if (two_b >= 3.0 - kEq)
          throw ArgumentError("case dispatch: 2s + alpha = " + std::to_string(two_b)
                              + " >= 3 lies outside the estimate table");
        if (std::fabs(two_b - 1.0) <= kEq)
          return plan_loglip(0.5 * two_b);
        if (std::fabs(two_b - 2.0) <= kEq)
          return plan_oneplus(n);
        Plan p = plan_holder(0.5 * two_b, n);
        if (two_b > 2.0)
          p.case_name += " (beyond the theorem's table: report only)";
        return p;
      }
      }
      return plan_holder(spec.alpha, n);
    }

    double sup_over(const GridField& g, const Mask& m)
    {
      double s = 0.0;
      for (std::size_t i = 0; i < g.values.size(); ++i)
        if (m.in[i])
          s = std::max(s, std::fabs(g.values[i]));
      return s;
    }

    HolderReport run_plan(const GridField& u, const ParabolicCylinder& Q, const HolderSpec& spec, Plan plan)
    {
      spec.validate();
      u.validate();
      Mask mask = make_mask(u, Q);
      HolderReport rep;
      rep.case_name = plan.case_name;
      rep.theorem_ratio = std::numeric_limits<double>::quiet_NaN();
      rep.sup_norm = sup_over(u, mask);
      std::map<std::tuple<int, int, int>, GridField> cache;
      auto values_for = [&](const HolderComponent& c) -> const GridField& {
        auto key = std::make_tuple(static_cast<int>(c.derivative), c.axis, c.axis2);
        auto it = cache.find(key);
        if (it == cache.end())
          it = cache.emplace(key, grid_derivative(u, c.derivative, c.axis, c.axis2)).first;
        return it->second;
      };
      if (plan.grad_sup)
        for (int d = 0; d < u.n(); ++d)
          rep.derivative_sup = std::max(rep.derivative_sup, sup_over(values_for(comp("", Derivative::Dx, d, PairKind::Space, Modulus::Power, 1.0)), mask));
      if (plan.second_sup) {
        double h = 0.0;
        for (int i = 0; i < u.n(); ++i)
          for (int j = i; j < u.n(); ++j)
            h = std::max(h, sup_over(values_for(comp("", Derivative::Dxx, i, PairKind::Joint, Modulus::Power, 1.0, false, j)), mask));
        rep.derivative_sup += h + sup_over(values_for(comp("", Derivative::Dt, 0, PairKind::Joint, Modulus::Power, 1.0)), mask);
      }
      for (auto& c : plan.comps) {
        scan_component(values_for(c), mask, c, spec);
        rep.seminorm += c.seminorm;
        if (c.witness)
          rep.witnesses.push_back(*c.witness);
      }
      const HolderComponent& primary = plan.comps.front();
      const int nbins = static_cast<int>(primary.bins.size());
      if (nbins < spec.min_bins)
        throw ArgumentError("under-resolved grid: component " + primary.name + " spans " + std::to_string(nbins)
                            + " dyadic distance bins inside the cylinder, at least "
                            + std::to_string(spec.min_bins) + " needed");
      rep.effective_exponent = primary.effective_exponent;
      rep.norm = rep.sup_norm + rep.derivative_sup + rep.seminorm;
      rep.components = std::move(plan.comps);
      return rep;
    }

  }

  HolderReport estimate_parabolic_holder(const GridField& u, const ParabolicCylinder& Q, const HolderSpec& spec)
  {
    spec.validate();
    return run_plan(u, Q, spec, plan_for(spec, u.n()));
  }

  HolderReport estimate_log_lipschitz(const GridField& u, const ParabolicCylinder& Q, const HolderSpec& spec)
  {
    HolderSpec sp = spec;
    if (sp.mode != HolderMode::OnePlusLog)
      sp.mode = HolderMode::LogLipschitz;
    return estimate_parabolic_holder(u, Q, sp);
  }

  double reevaluate_witness(const GridField& u, const HolderComponent& c)
  {
    if (!c.witness)
      return 0.0;
    GridField g = grid_derivative(u, c.derivative, c.axis, c.axis2);
    const Witness& w = *c.witness;
    std::vector<int> i1, i2;
    int k1, k2;
    g.unravel(w.node1, i1, k1);
    g.unravel(w.node2, i2, k2);
    std::vector<int> off(g.n() + 1);
    for (int d = 0; d < g.n(); ++d)
      off[d] = i2[d] - i1[d];
    off[g.n()] = k2 - k1;
    const double dist = offset_distance(g, c, off);
    return std::fabs(g.values[w.node1] - g.values[w.node2]) / modulus(c, dist);
  }

  HolderReport check_estimate_theorem(const GridField& u, const GridField& f, double s, std::optional<double> alpha,
                                      TheoremKind which, const ParabolicCylinder& Qt, const ParabolicCylinder& Q,
                                      const HolderSpec& base, const GridField* u_full)
  {
    if (!(s > 0.0 && s < 1.0))
      throw DomainError("s must lie in (0,1)");
    if (Qt.n() != Q.n())
      throw ArgumentError("cylinders of different dimension");
    // Qt strictly inside Q with parabolic gap at least one
    double cd = 0.0;
    for (int d = 0; d < Q.n(); ++d)
      cd += (Qt.center_x[d] - Q.center_x[d]) * (Qt.center_x[d] - Q.center_x[d]);
    const double gap = Q.radius - std::sqrt(cd) - Qt.radius;
    if (gap < 1.0 - kEq || Qt.t_lo - Q.t_lo < 1.0 - kEq || Qt.t_hi > Q.t_hi + kEq)
      throw ArgumentError("theorem check needs the inner cylinder inside the outer one with gap >= 1");

    HolderSpec left = base;
    HolderSpec right = base;
    right.mode = HolderMode::Holder;
    std::string label;
    if (which == TheoremKind::Holder) {
      label = "holder-estimate";
      if (std::fabs(s - 0.5) <= kEq) {
        left.mode = HolderMode::LogLipschitz;
        left.time_alpha = s;
      } else {
        left.mode = HolderMode::Holder;
        left.alpha = s;
      }
    } else {
      if (!alpha || !(*alpha > 0.0 && *alpha < 1.0))
        throw ArgumentError("Schauder check needs a source exponent alpha in (0,1)");
      label = "schauder-estimate";
      left.mode = HolderMode::Schauder;
      left.s = s;
      left.alpha = *alpha;
      right.alpha = 0.5 * *alpha;
    }
    HolderReport rep = estimate_parabolic_holder(u, Qt, left);
    double rhs;
    if (which == TheoremKind::Holder) {
      rhs = sup_over(f, make_mask(f, Q));
    } else {
      rhs = estimate_parabolic_holder(f, Q, right).norm;
    }
    const GridField& uq = u_full ? *u_full : u;
    const double usup = sup_over(uq, make_mask(uq, Q));
    rep.right_side = rhs + usup;
    rep.theorem_ratio = rep.norm / std::max(rep.right_side, 1e-300);
    rep.case_name = label + ": " + rep.case_name;
    return rep;
  }

  HolderReport homogeneous_estimate(const GridField& v, const ParabolicCylinder& Qt, const ParabolicCylinder& Q,
                                    const GridField* v_full)
  {
    v.validate();
    Mask m = make_mask(v, Qt);
    HolderReport rep;
    rep.case_name = "C2-homogeneous";
    rep.sup_norm = sup_over(v, m);
    double g = 0.0, h = 0.0;
    for (int i = 0; i < v.n(); ++i) {
      g = std::max(g, sup_over(grid_derivative(v, Derivative::Dx, i), m));
      for (int j = i; j < v.n(); ++j)
        h = std::max(h, sup_over(grid_derivative(v, Derivative::Dxx, i, j), m));
    }
    const double dt = sup_over(grid_derivative(v, Derivative::Dt), m);
    rep.derivative_sup = g + h + dt;
    rep.norm = rep.sup_norm + rep.derivative_sup;
    rep.effective_exponent = std::numeric_limits<double>::quiet_NaN();
    const GridField& vq = v_full ? *v_full : v;
    rep.right_side = sup_over(vq, make_mask(vq, Q));
    rep.theorem_ratio = rep.norm / std::max(rep.right_side, 1e-300);
    return rep;
  }

  namespace {

    json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

    json witness_json(const Witness& w)
    {
      return json{{"component", w.component}, {"p1", json{{"x", w.x1}, {"t", w.t1}}},
                  {"p2", json{{"x", w.x2}, {"t", w.t2}}}, {"increment", num(w.increment)},
                  {"distance", num(w.distance)}, {"ratio", num(w.ratio)}};
    }

  }

  std::string report_json(const HolderReport& r)
  {
    json j;
    j["case"] = r.case_name;
    j["norms"] = json{{"sup_norm", num(r.sup_norm)}, {"derivative_sup", num(r.derivative_sup)},
                      {"seminorm", num(r.seminorm)}, {"norm", num(r.norm)}};
    json ex = json::object();
    ex["effective_exponent"] = num(r.effective_exponent);
    json comps = json::array();
    for (const auto& c : r.components) {
      json bins = json::array();
      for (const auto& b : c.bins)
        bins.push_back(json{{"distance", num(b.distance)}, {"increment", num(b.increment)}, {"pairs", b.pairs}});
      comps.push_back(json{{"name", c.name}, {"seminorm", num(c.seminorm)},
                           {"effective_exponent", num(c.effective_exponent)}, {"pairs", c.pair_count},
                           {"sampled", c.sampled}, {"bins", bins}});
    }
    j["exponents"] = ex;
    j["components"] = comps;
    j["ratios"] = json{{"theorem_ratio", num(r.theorem_ratio)}, {"right_side", num(r.right_side)}};
    json ws = json::array();
    for (const auto& w : r.witnesses)
      ws.push_back(witness_json(w));
    j["witnesses"] = ws;
    if (!r.diagnostic.empty())
      j["diagnostic"] = r.diagnostic;
    return j.dump(2);
  }

}
