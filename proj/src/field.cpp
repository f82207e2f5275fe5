#include "fracheat/field.h"
#include "fracheat/errors.h"

#include <algorithm>
#include <cstdio>

namespace fracheat {

  std::string to_string(const Growth& g)
  {
    char buf[64];
    switch (g.kind) {
    case GrowthKind::Bounded: return "bounded";
    case GrowthKind::Affine: return "affine";
    case GrowthKind::Custom: return "custom";
    case GrowthKind::Polynomial: std::snprintf(buf, sizeof buf, "polynomial(%g)", g.rate); return buf;
    case GrowthKind::TimePolynomial: std::snprintf(buf, sizeof buf, "time-polynomial(%g)", g.rate); return buf;
    case GrowthKind::ExponentialInTime: std::snprintf(buf, sizeof buf, "exponential-in-time(%g)", g.rate); return buf;
    case GrowthKind::SpatialGaussian: std::snprintf(buf, sizeof buf, "spatial-gaussian(%g)", g.rate); return buf;
    }
    return "unknown";
  }

  FieldHandle make_field(int n, Evaluator f, Growth g, std::string name)
  {
    FieldHandle u;
    u.n = n;
    u.eval = std::move(f);
    u.growth = g;
    u.name = std::move(name);
    return u;
  }

  FieldHandle lift_time_independent(int n, std::function<double(std::span<const double>)> g,
                                    Growth growth, std::string name)
  {
    return make_field(n, [g = std::move(g)](std::span<const double> x, double) { return g(x); },
                      growth, std::move(name));
  }

  FieldHandle lift_space_independent(int n, std::function<double(double)> h, Growth growth,
                                     std::string name)
  {
    FieldHandle u = make_field(n, [h](std::span<const double>, double t) { return h(t); }, growth,
                               std::move(name));
    // Gaussian means of an x-independent field are just the value
    u.heat_flow = [h](std::span<const double>, double tau, double) { return h(tau); };
    return u;
  }

  namespace {

    int growth_rank(const Growth& g)
    {
      switch (g.kind) {
      case GrowthKind::Bounded: return 0;
      case GrowthKind::Affine: return 1;
      case GrowthKind::Polynomial: return 2;
      case GrowthKind::TimePolynomial: return 3;
      case GrowthKind::ExponentialInTime: return 4;
      case GrowthKind::SpatialGaussian: return 5;
      case GrowthKind::Custom: return 6;
      }
      return 6;
    }

  }

  FieldHandle linear_combination(const std::vector<std::pair<double, FieldHandle>>& terms)
  {
    if (terms.empty())
      throw ArgumentError("linear_combination needs at least one term");
    const int n = terms.front().second.n;
    for (const auto& [c, u] : terms)
      if (u.n != n)
        throw ArgumentError("linear_combination: dimension mismatch");

    FieldHandle out;
    out.n = n;
    out.eval = [terms](std::span<const double> x, double t) {
      double acc = 0.0;
      for (const auto& [c, u] : terms)
        acc += c * u.eval(x, t);
      return acc;
    };

    // growth: the worst tag wins; mixing two different non-trivial kinds falls back to sampling
    Growth g = Growth::bounded();
    for (const auto& [c, u] : terms) {
      if (c == 0.0)
        continue;
      if (growth_rank(u.growth) > growth_rank(g))
        g = u.growth;
      else if (u.growth.kind == g.kind)
        g.rate = (g.kind == GrowthKind::ExponentialInTime) ? std::min(g.rate, u.growth.rate)
                                                            : std::max(g.rate, u.growth.rate);
    }
    out.growth = g;

    bool all_floor = true, all_flow = true;
    double floor = 0.0;
    bool first = true;
    for (const auto& [c, u] : terms) {
      if (!u.time_floor)
        all_floor = false;
      else {
        floor = first ? *u.time_floor : std::min(floor, *u.time_floor);
        first = false;
      }
      if (!u.heat_flow)
        all_flow = false;
      out.concurrent_safe = out.concurrent_safe && u.concurrent_safe;
    }
    if (all_floor)
      out.time_floor = floor;
    if (all_flow)
      out.heat_flow = [terms](std::span<const double> x, double tau, double a) {
        double acc = 0.0;
        for (const auto& [c, u] : terms)
          acc += c * u.heat_flow(x, tau, a);
        return acc;
      };
    out.name = "combination";
    return out;
  }

  FieldHandle translated(const FieldHandle& u, std::span<const double> shift_x, double shift_t)
  {
    if (static_cast<int>(shift_x.size()) != u.n)
      throw ArgumentError("translated: dimension mismatch");
    std::vector<double> a(shift_x.begin(), shift_x.end());
    FieldHandle out = u;
    out.eval = [u, a, shift_t](std::span<const double> x, double t) {
      std::vector<double> y(a.size());
      for (std::size_t i = 0; i < a.size(); ++i)
        y[i] = x[i] - a[i];
      return u.eval(y, t - shift_t);
    };
    if (u.time_floor)
      out.time_floor = *u.time_floor + shift_t;
    if (u.support) {
      ParabolicCylinder c = *u.support;
      for (std::size_t i = 0; i < a.size(); ++i)
        c.center_x[i] += a[i];
      c.t_lo += shift_t;
      c.t_hi += shift_t;
      out.support = c;
    }
    if (u.heat_flow)
      out.heat_flow = [u, a, shift_t](std::span<const double> x, double tau, double s) {
        std::vector<double> y(a.size());
        for (std::size_t i = 0; i < a.size(); ++i)
          y[i] = x[i] - a[i];
        return u.heat_flow(y, tau - shift_t, s);
      };
    if (u.localize)
      out.localize = [u, a, shift_t](double tau) -> std::optional<Localization> {
        auto l = u.localize(tau - shift_t);
        if (l)
          for (std::size_t i = 0; i < a.size(); ++i)
            l->center[i] += a[i];
        return l;
      };
    return out;
  }

}
