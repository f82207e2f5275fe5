#include "fracheat/greens.h"
#include "fracheat/errors.h"
#include "fracheat/master_operator.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>

namespace fracheat {

  namespace {

    constexpr double kZclip = 6.5;        // e^{-42}: nothing of the Gaussian is left beyond
    constexpr int kLineOrder = 10, kLinePanels = 16;
    constexpr int kRadialOrder = 8, kRadialPanels = 10;
    constexpr int kLagOrder = 16, kLagOrderCoarse = 10;
    constexpr int kCheb = 16;

    // A base field integrated over the intersection of balls and a time window.
    struct Region {
      std::vector<ParabolicCylinder> balls;
      double t_lo = -std::numeric_limits<double>::infinity();
      double t_hi = std::numeric_limits<double>::infinity();

      bool empty() const { return balls.empty(); }
      void add(const ParabolicCylinder& c)
      {
        balls.push_back(c);
        t_lo = std::max(t_lo, c.t_lo);
        t_hi = std::min(t_hi, c.t_hi);
      }
      bool contains_x(std::span<const double> y) const
      {
        for (const auto& b : balls)
          if (!b.contains_x(y))
            return false;
        return true;
      }
      double boundary_distance(std::span<const double> x) const
      {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& b : balls)
          d = std::min(d, std::fabs(b.radius - std::sqrt(b.dist2(x))));
        return d;
      }
    };

    struct Source {
      FieldHandle f;
      Region region;
    };

    Source make_source(const FieldHandle& f)
    {
      Source src{f, {}};
      if (f.support)
        src.region.add(*f.support);
      return src;
    }

    // E[f(x - 2 sqrt(a) Z, tau) 1_region], exact geometry in one and two dimensions
    double region_mean(const Source& src, std::span<const double> x, double tau, double a,
                       const QuadratureSpec& spec, int& hint)
    {
      const FieldHandle& f = src.f;
      if (f.zero_at_time(tau) || tau <= src.region.t_lo || tau >= src.region.t_hi)
        return 0.0;
      if (a <= 0.0)
        return src.region.contains_x(x) ? f.eval(x, tau) : 0.0;
      const int n = f.n;
      const double sa = 2.0 * std::sqrt(a);

      if (src.region.empty()) {
        MeanResult m = spatial_mean(f, x, tau, a, spec, hint);
        hint = m.order;
        return m.value;
      }

      if (n == 1) {
        double zlo = -kZclip, zhi = kZclip;
        for (const auto& b : src.region.balls) {
          const double p = x[0] - b.center_x[0];
          zlo = std::max(zlo, (p - b.radius) / sa);
          zhi = std::min(zhi, (p + b.radius) / sa);
        }
        if (zhi <= zlo)
          return 0.0;
        const Rule& gl = gauss_legendre(kLineOrder);
        const double h = (zhi - zlo) / kLinePanels;
        double acc = 0.0;
        double y[1];
        for (int k = 0; k < kLinePanels; ++k) {
          const double mid = zlo + (k + 0.5) * h;
          double part = 0.0;
          for (std::size_t j = 0; j < gl.size(); ++j) {
            const double z = mid + 0.5 * h * gl.x[j];
            y[0] = x[0] - sa * z;
            part += gl.w[j] * std::exp(-z * z) * f.eval(y, tau);
          }
          acc += 0.5 * h * part;
        }
        return acc / std::sqrt(std::numbers::pi);
      }

      if (n == 2) {
        // rays y = x - L e(theta); per ball the ray is inside for L in (lo, hi)
        bool inside_all = true;
        double th0 = 0.0, alpha = std::numbers::pi;
        for (const auto& b : src.region.balls) {
          const double p0 = x[0] - b.center_x[0], p1 = x[1] - b.center_x[1];
          const double pn = std::hypot(p0, p1);
          if (pn >= b.radius) {
            inside_all = false;
            const double al = std::asin(std::min(1.0, b.radius / pn));
            if (al < alpha) {
              alpha = al;
              th0 = std::atan2(p1, p0);
            }
          }
        }
        const Rule& gr = gauss_legendre(kRadialOrder);
        auto ray = [&](double th) {
          const double e0 = std::cos(th), e1 = std::sin(th);
          double lo = 0.0, hi = kZclip * sa;
          for (const auto& b : src.region.balls) {
            const double p0 = x[0] - b.center_x[0], p1 = x[1] - b.center_x[1];
            const double pe = p0 * e0 + p1 * e1;
            const double disc = pe * pe - (p0 * p0 + p1 * p1) + b.radius * b.radius;
            if (disc <= 0.0)
              return 0.0;
            const double sq = std::sqrt(disc);
            lo = std::max(lo, pe - sq);
            hi = std::min(hi, pe + sq);
          }
          if (hi <= lo)
            return 0.0;
          const double zlo = lo / sa, zhi = hi / sa;
          const double h = (zhi - zlo) / kRadialPanels;
          double acc = 0.0;
          double y[2];
          for (int k = 0; k < kRadialPanels; ++k) {
            const double mid = zlo + (k + 0.5) * h;
            double part = 0.0;
            for (std::size_t j = 0; j < gr.size(); ++j) {
              const double z = mid + 0.5 * h * gr.x[j];
              y[0] = x[0] - sa * z * e0;
              y[1] = x[1] - sa * z * e1;
              part += gr.w[j] * z * std::exp(-z * z) * f.eval(y, tau);
            }
            acc += 0.5 * h * part;
          }
          return acc;
        };
        double acc = 0.0;
        const int na = spec.conv_angles;
        if (inside_all) {
          for (int k = 0; k < na; ++k)
            acc += ray(2.0 * std::numbers::pi * (k + 0.5) / na);
          acc *= 2.0 * std::numbers::pi / na;
        } else {
          // theta = th0 + alpha sin(phi) takes up the square-root ends of the chord
          const Rule& ga = gauss_legendre(na);
          for (std::size_t k = 0; k < ga.size(); ++k) {
            const double phi = 0.5 * std::numbers::pi * ga.x[k];
            acc += ga.w[k] * ray(th0 + alpha * std::sin(phi)) * alpha * std::cos(phi);
          }
          acc *= 0.5 * std::numbers::pi;
        }
        return acc / std::numbers::pi;
      }

      // higher dimensions: Gauss-Hermite on the indicator
      FieldHandle g = f;
      g.heat_flow = nullptr;
      g.localize = nullptr;
      g.support.reset();
      const Region reg = src.region;
      g.eval = [f, reg](std::span<const double> y, double t) { return reg.contains_x(y) ? f.eval(y, t) : 0.0; };
      MeanResult m = spatial_mean(g, x, tau, a, spec, hint);
      hint = m.order;
      return m.value;
    }

    struct LagWindow {
      double lo = 0.0, hi = 0.0;
      bool unbounded = false;
    };

    LagWindow lag_window(const Source& src, double t, const QuadratureSpec& spec)
    {
      LagWindow w;
      double hi = std::numeric_limits<double>::infinity();
      if (src.f.time_floor)
        hi = std::min(hi, t - *src.f.time_floor);
      if (std::isfinite(src.region.t_lo))
        hi = std::min(hi, t - src.region.t_lo);
      if (std::isfinite(src.region.t_hi))
        w.lo = std::max(0.0, t - src.region.t_hi);
      if (!std::isfinite(hi)) {
        hi = spec.r_max;
        w.unbounded = true;
      }
      w.hi = hi;
      return w;
    }

    struct Piece {
      double lo, hi;
      bool origin;   // starts at rho = 0: Jacobi weight rho^{s-1}
    };

    // graded pieces on [lo, hi]: a first piece of width h0 at the origin, then geometric
    std::vector<Piece> lag_pieces(double lo, double hi, double d, const QuadratureSpec& spec)
    {
      std::vector<Piece> out;
      if (hi <= lo)
        return out;
      const double ratio = std::pow(10.0, 1.0 / spec.conv_panels_per_decade);
      double h0 = std::min({hi / 64.0, d * d / 16.0, 1.0 / 16.0});
      h0 = std::max(h0, hi * std::ldexp(1.0, -40));
      std::vector<double> br;
      if (lo <= 0.0) {
        br.push_back(0.0);
        br.push_back(std::min(h0, hi));
      } else {
        // geometric from lo when lo sits below h0, keeping pieces away from the weight's pole
        double b = lo;
        br.push_back(b);
        while (b * ratio < h0 && b * ratio < hi) {
          b *= ratio;
          br.push_back(b);
        }
        if (b < h0 && h0 < hi)
          br.push_back(h0);
      }
      while (br.back() < hi) {
        double b = std::max(br.back() * ratio, h0);
        if (b > hi || (hi - b) < 0.25 * (b - br.back()))
          b = hi;
        br.push_back(b);
      }
      for (std::size_t i = 0; i + 1 < br.size(); ++i) {
        const double a = br[i], b = br[i + 1];
        if (b <= lo)
          continue;
        if (a == 0.0) {
          out.push_back({a, b, true});
          continue;
        }
        // long pieces are split so time oscillations of the source stay resolved
        const double cap = std::max(0.5, 0.25 * a);
        const int k = std::min(8, std::max(1, static_cast<int>(std::ceil((b - a) / cap))));
        for (int j = 0; j < k; ++j)
          out.push_back({a + (b - a) * j / k, a + (b - a) * (j + 1) / k, false});
      }
      return out;
    }

    // int rho^{s-1} m(rho) d rho over the pieces
    template <class M>
    double lag_integral(const std::vector<Piece>& pieces, double s, int order, const M& m)
    {
      double acc = 0.0;
      const Rule& gl = gauss_legendre(order);
      for (const auto& pc : pieces) {
        if (pc.origin) {
          LagPanel op = origin_panel(pc.hi, s, order);
          for (std::size_t j = 0; j < op.r.size(); ++j)
            acc += op.w[j] * m(op.r[j]);
        } else {
          const double half = 0.5 * (pc.hi - pc.lo), mid = 0.5 * (pc.hi + pc.lo);
          double part = 0.0;
          for (std::size_t j = 0; j < gl.size(); ++j) {
            const double r = mid + half * gl.x[j];
            part += gl.w[j] * std::pow(r, s - 1.0) * m(r);
          }
          acc += half * part;
        }
      }
      return acc;
    }

    struct RawConv {
      double value = 0.0;
      double coarse = 0.0;
      double tail = 0.0;
    };

    RawConv raw_convolve(const FracParams& p, const Source& src, std::span<const double> x, double t,
                         const QuadratureSpec& spec, bool want_coarse)
    {
      RawConv out;
      const LagWindow win = lag_window(src, t, spec);
      if (win.hi <= win.lo)
        return out;
      const double d = src.region.empty() ? std::numeric_limits<double>::infinity()
                                          : src.region.boundary_distance(x);
      int hint = 0;
      auto m = [&](double rho) { return region_mean(src, x, t - rho, rho, spec, hint); };
      auto pieces = lag_pieces(win.lo, win.hi, d, spec);
      const double g = std::tgamma(p.s);
      out.value = lag_integral(pieces, p.s, kLagOrder, m) / g;
      if (want_coarse)
        out.coarse = lag_integral(pieces, p.s, kLagOrderCoarse, m) / g;
      if (win.unbounded) {
        // compare the last two doublings of the range; growth means divergence
        auto j1p = lag_pieces(0.5 * win.hi, win.hi, d, spec);
        auto j2p = lag_pieces(win.hi, 2.0 * win.hi, d, spec);
        const double j1 = lag_integral(j1p, p.s, kLagOrder, m) / g;
        const double j2 = lag_integral(j2p, p.s, kLagOrder, m) / g;
        const double scale = std::max(std::fabs(out.value), 1e-300);
        if (std::fabs(j2) > 1e-12 * scale) {
          const double q = (j1 != 0.0) ? j2 / j1 : 1.0;
          if (q >= 0.999)
            throw DivergenceError("Green convolution diverges: lag mass beyond r_max grows (ratio "
                                  + std::to_string(q) + " per doubling)");
          out.tail = (q > 0.0) ? j2 / (1.0 - q) : j2;
        }
        out.value += out.tail;
        out.coarse += out.tail;
      }
      return out;
    }

    // Chebyshev (first kind) interpolant of m(sigma) = P_sigma f(x, t - sigma) on the lag pieces
    struct Profile {
      std::vector<double> x;
      double t = 0.0;
      std::vector<Piece> pieces;
      std::vector<std::array<double, kCheb>> vals;

      double eval(double sg) const
      {
        if (pieces.empty() || sg < pieces.front().lo || sg > pieces.back().hi)
          return 0.0;
        auto it = std::upper_bound(pieces.begin(), pieces.end(), sg,
                                   [](double v, const Piece& pc) { return v < pc.hi; });
        std::size_t k = (it == pieces.end()) ? pieces.size() - 1 : static_cast<std::size_t>(it - pieces.begin());
        const Piece& pc = pieces[k];
        const double u = (2.0 * sg - pc.lo - pc.hi) / (pc.hi - pc.lo);
        double num = 0.0, den = 0.0;
        for (int j = 0; j < kCheb; ++j) {
          const double th = std::numbers::pi * (j + 0.5) / kCheb;
          const double diff = u - std::cos(th);
          if (diff == 0.0)
            return vals[k][j];
          const double wj = (j % 2 ? -1.0 : 1.0) * std::sin(th) / diff;
          num += wj * vals[k][j];
          den += wj;
        }
        return num / den;
      }

      // int_{max(a, lo)}^{hi} (sigma - a)^{s-1} m(sigma) d sigma
      double weighted(double a, double s) const
      {
        double acc = 0.0;
        const Rule& gl = gauss_legendre(kCheb);
        const Rule& gj = gauss_jacobi(kCheb, 0.0, s - 1.0);
        auto gl_piece = [&](double lo, double hi) {
          const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
          double part = 0.0;
          for (std::size_t j = 0; j < gl.size(); ++j) {
            const double sg = mid + half * gl.x[j];
            part += gl.w[j] * std::pow(sg - a, s - 1.0) * eval(sg);
          }
          return half * part;
        };
        for (const auto& pc : pieces) {
          if (a >= pc.hi)
            continue;
          if (a >= pc.lo) {
            const double half = 0.5 * (pc.hi - a);
            double part = 0.0;
            for (std::size_t j = 0; j < gj.size(); ++j)
              part += gj.w[j] * eval(a + half * (1.0 + gj.x[j]));
            acc += std::pow(half, s) * part;
            continue;
          }
          const double e = pc.lo - a, w = pc.hi - pc.lo;
          if (e >= w) {
            acc += gl_piece(pc.lo, pc.hi);
            continue;
          }
          double b = pc.lo;
          double step = 2.0 * e;
          while (b < pc.hi) {
            double nb = std::min(pc.hi, a + step);
            if (nb <= b)
              nb = pc.hi;
            acc += gl_piece(b, nb);
            b = nb;
            step *= 2.0;
          }
        }
        return acc;
      }
    };

    std::shared_ptr<const Profile> build_profile(const Source& src, std::span<const double> x, double t,
                                                 const QuadratureSpec& spec)
    {
      auto pr = std::make_shared<Profile>();
      pr->x.assign(x.begin(), x.end());
      pr->t = t;
      const LagWindow win = lag_window(src, t, spec);
      if (win.hi <= win.lo)
        return pr;
      const double d = src.region.empty() ? std::numeric_limits<double>::infinity()
                                          : src.region.boundary_distance(x);
      pr->pieces = lag_pieces(win.lo, win.hi, d, spec);
      int hint = 0;
      for (const auto& pc : pr->pieces) {
        // interior nodes: the window ends are where restricted sources jump
        std::array<double, kCheb> v{};
        for (int j = 0; j < kCheb; ++j) {
          const double u = std::cos(std::numbers::pi * (j + 0.5) / kCheb);
          const double sg = 0.5 * (pc.lo + pc.hi) + 0.5 * (pc.hi - pc.lo) * u;
          v[j] = region_mean(src, x, t - sg, sg, spec, hint);
        }
        pr->vals.push_back(v);
      }
      return pr;
    }

    class ProfileCache {
    public:
      std::shared_ptr<const Profile> find(std::span<const double> x, double t)
      {
        std::lock_guard<std::mutex> lk(m_mu);
        const double tol = 1e-12 * std::max(1.0, std::fabs(t));
        for (const auto& pr : m_items)
          if (std::fabs(pr->t - t) <= tol && std::equal(x.begin(), x.end(), pr->x.begin(), pr->x.end()))
            return pr;
        return nullptr;
      }
      void put(std::shared_ptr<const Profile> pr)
      {
        std::lock_guard<std::mutex> lk(m_mu);
        m_items.push_front(std::move(pr));
        if (m_items.size() > 64)
          m_items.pop_back();
      }
    private:
      std::mutex m_mu;
      std::deque<std::shared_ptr<const Profile>> m_items;
    };

    FieldHandle green_field_of(const FracParams& p, const Source& src, const QuadratureSpec& spec)
    {
      FieldHandle w;
      w.n = p.n;
      w.growth = Growth::bounded();
      w.name = "G*" + (src.f.name.empty() ? std::string("f") : src.f.name);
      w.concurrent_safe = src.f.concurrent_safe;
      std::optional<double> floor = src.f.time_floor;
      if (std::isfinite(src.region.t_lo))
        floor = floor ? std::max(*floor, src.region.t_lo) : src.region.t_lo;
      w.time_floor = floor;
      auto sp = std::make_shared<Source>(src);
      w.eval = [p, sp, spec](std::span<const double> x, double t) {
        return raw_convolve(p, *sp, x, t, spec, false).value;
      };
      auto cache = std::make_shared<ProfileCache>();
      const double g = std::tgamma(p.s);
      w.heat_flow = [sp, spec, cache, g, s = p.s](std::span<const double> x, double tau, double a) {
        // P_a (G*f)(x, tau) = (1/Gamma(s)) int_a (sigma - a)^{s-1} P_sigma f(x, tau + a - sigma) d sigma
        const double t = tau + a;
        auto pr = cache->find(x, t);
        if (!pr) {
          pr = build_profile(*sp, x, t, spec);
          cache->put(pr);
        }
        return pr->weighted(a, s) / g;
      };
      return w;
    }

    Source inside_source(const RestrictedSource& f)
    {
      Source src = make_source(f.base);
      src.region.add(f.cylinder);
      return src;
    }

  }

  double green_constant(int n, double s)
  {
    if (!(s > 0.0 && s < 1.0))
      throw DomainError("s must lie in (0,1)");
    return 1.0 / (std::pow(4.0 * std::numbers::pi, 0.5 * n) * std::tgamma(s));
  }

  double eval_green(const FracParams& p, std::span<const double> x, double t)
  {
    if (static_cast<int>(x.size()) != p.n)
      throw ArgumentError("eval_green: dimension mismatch");
    if (t <= 0.0)
      return 0.0;
    double r2 = 0.0;
    for (double v : x)
      r2 += v * v;
    return green_constant(p.n, p.s) * std::pow(t, -(0.5 * p.n + 1.0 - p.s)) * std::exp(-r2 / (4.0 * t));
  }

  double RestrictedSource::operator()(std::span<const double> x, double t) const
  {
    const bool in = cylinder.contains(x, t);
    if ((mode == RestrictMode::Inside) != in)
      return 0.0;
    return base.eval(x, t);
  }

  FieldHandle RestrictedSource::as_field() const
  {
    FieldHandle out = base;
    RestrictedSource self = *this;
    out.eval = [self](std::span<const double> x, double t) { return self(x, t); };
    out.heat_flow = nullptr;
    out.localize = nullptr;
    if (mode == RestrictMode::Inside) {
      out.support = cylinder;
      out.name = base.name + "_Q";
    } else {
      out.name = base.name + "_Qc";
    }
    return out;
  }

  double extension_mass(const GridField& g, double s, std::span<const double> x, double t)
  {
    const double tmin = std::min(g.time_axis.min, g.time_axis.max);
    const double T = t - tmin;
    if (T <= 0.0)
      return 0.0;
    QuadratureSpec spec;
    auto out_frac = [&](double rho) {
      double pin = 1.0;
      const double sa = 2.0 * std::sqrt(rho);
      for (int i = 0; i < g.n(); ++i) {
        const double lo = std::min(g.axes[i].min, g.axes[i].max), hi = std::max(g.axes[i].min, g.axes[i].max);
        pin *= 0.5 * (std::erf((x[i] - lo) / sa) - std::erf((x[i] - hi) / sa));
      }
      return 1.0 - pin;
    };
    double d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.n(); ++i)
      d = std::min({d, std::fabs(x[i] - g.axes[i].min), std::fabs(x[i] - g.axes[i].max)});
    auto pieces = lag_pieces(0.0, T, std::max(d, 1e-6), spec);
    const double num = lag_integral(pieces, s, kLagOrder, out_frac);
    return num / (std::pow(T, s) / s);
  }

  namespace {

    ConvolutionResult finish(const FracParams& p, const Source& src, std::span<const double> x, double t,
                             const QuadratureSpec& spec, const FieldHandle& f)
    {
      ConvolutionResult res;
      RawConv rc = raw_convolve(p, src, x, t, spec, spec.self_convergence);
      res.value = rc.value;
      res.tail = rc.tail;
      res.error_estimate = spec.self_convergence ? std::fabs(rc.value - rc.coarse) : 0.0;
      if (f.grid_source) {
        res.extension_mass = extension_mass(*f.grid_source, p.s, x, t);
        res.extension_warning = res.extension_mass > 1e-3;
      }
      return res;
    }

  }

  ConvolutionResult convolve_green(const FracParams& p, const FieldHandle& f, std::span<const double> x,
                                   double t, const QuadratureSpec& spec)
  {
    spec.validate();
    if (f.n != p.n || static_cast<int>(x.size()) != p.n)
      throw ArgumentError("convolve_green: dimension mismatch");
    return finish(p, make_source(f), x, t, spec, f);
  }

  ConvolutionResult convolve_green(const FracParams& p, const RestrictedSource& f, std::span<const double> x,
                                   double t, const QuadratureSpec& spec)
  {
    spec.validate();
    if (f.base.n != p.n || static_cast<int>(x.size()) != p.n || f.cylinder.n() != p.n)
      throw ArgumentError("convolve_green: dimension mismatch");
    ConvolutionResult in = finish(p, inside_source(f), x, t, spec, f.base);
    if (f.mode == RestrictMode::Inside)
      return in;
    ConvolutionResult all = finish(p, make_source(f.base), x, t, spec, f.base);
    all.value -= in.value;
    all.error_estimate += in.error_estimate;
    return all;
  }

  FieldHandle green_field(const FracParams& p, const FieldHandle& f, const QuadratureSpec& spec)
  {
    spec.validate();
    if (f.n != p.n)
      throw ArgumentError("green_field: dimension mismatch");
    return green_field_of(p, make_source(f), spec);
  }

  FieldHandle green_field(const FracParams& p, const RestrictedSource& f, const QuadratureSpec& spec)
  {
    spec.validate();
    if (f.base.n != p.n || f.cylinder.n() != p.n)
      throw ArgumentError("green_field: dimension mismatch");
    FieldHandle in = green_field_of(p, inside_source(f), spec);
    in.name = "G*" + f.base.name + "_Q";
    if (f.mode == RestrictMode::Inside)
      return in;
    FieldHandle all = green_field_of(p, make_source(f.base), spec);
    FieldHandle out = linear_combination({{1.0, all}, {-1.0, in}});
    out.name = "G*" + f.base.name + "_Qc";
    return out;
  }

  GridField solve_w(const FracParams& p, const FieldHandle& f, const ParabolicCylinder& Q, const GridField& tmpl,
                    const QuadratureSpec& spec, int threads)
  {
    if (tmpl.n() != p.n)
      throw ArgumentError("solve_w: template dimension mismatch");
    FieldHandle w = green_field(p, RestrictedSource{f, Q, RestrictMode::Inside}, spec);
    GridField out = GridField::like(tmpl, "w");
    sample_into(out, w, threads);
    return out;
  }

  Decomposition decompose(const FracParams& p, const GridField& u, const FieldHandle& f, const ParabolicCylinder& Q,
                          const QuadratureSpec& spec, const DecomposeOptions& opt)
  {
    u.validate();
    Decomposition dec;
    dec.w_field = green_field(p, RestrictedSource{f, Q, RestrictMode::Inside}, spec);
    dec.w = GridField::like(u, "w");
    sample_into(dec.w, dec.w_field, opt.threads);
    dec.v = GridField::like(u, "v");
    for (std::size_t i = 0; i < u.values.size(); ++i)
      dec.v.values[i] = u.values[i] - dec.w.values[i];

    if (opt.u_field) {
      dec.v_field = linear_combination({{1.0, *opt.u_field}, {-1.0, dec.w_field}});
      dec.v_field->name = "v";
      // spot checks at seeded interior points (inner half of Q)
      std::mt19937_64 rng(static_cast<unsigned long long>(spec.seed) + 0x5eedULL);
      std::uniform_real_distribution<double> U(-1.0, 1.0);
      double worst = 0.0, fscale = 0.0;
      for (int k = 0; k < opt.spot_checks; ++k) {
        std::vector<double> x(p.n);
        double r2;
        do {
          r2 = 0.0;
          for (auto& v : x) {
            v = U(rng);
            r2 += v * v;
          }
        } while (r2 >= 1.0);
        for (int i = 0; i < p.n; ++i)
          x[i] = Q.center_x[i] + 0.5 * Q.radius * x[i];
        const double t = Q.center_t() + 0.25 * (Q.t_hi - Q.t_lo) * U(rng);
        const double fv = f.eval(x, t);
        const double lhs = apply_master(p, *opt.u_field, x, t, spec).value;
        worst = std::max(worst, std::fabs(lhs - fv));
        fscale = std::max(fscale, std::fabs(fv));
        ++dec.spot_points;
      }
      dec.spot_residual = worst / std::max(fscale, 1e-300);
      dec.spot_ok = dec.spot_residual <= opt.spot_tol;
      if (!dec.spot_ok)
        dec.diagnostic = "spot check: |apply_master(u) - f| / |f| = " + std::to_string(dec.spot_residual)
                         + " exceeds " + std::to_string(opt.spot_tol);
    } else {
      dec.diagnostic = "spot check skipped: u given only on a grid";
    }
    return dec;
  }

  RepresentationReport verify_representation(const FracParams& p, const FieldHandle& u, const FieldHandle& f,
                                             const std::vector<SpaceTimePoint>& points, const QuadratureSpec& spec,
                                             double tol, bool nonnegative_declared)
  {
    RepresentationReport rep;
    rep.hypotheses_declared = nonnegative_declared;
    std::vector<double> res;
    for (const auto& pt : points) {
      RepresentationPoint rp;
      rp.x = pt.x;
      rp.t = pt.t;
      rp.u = u.eval(pt.x, pt.t);
      rp.conv = convolve_green(p, f, pt.x, pt.t, spec).value;
      rp.residual = rp.u - rp.conv;
      rep.scale = std::max({rep.scale, std::fabs(rp.u), std::fabs(rp.conv)});
      res.push_back(rp.residual);
      rep.points.push_back(rp);
    }
    if (!res.empty()) {
      std::vector<double> sorted = res;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t m = sorted.size();
      rep.constant = (m % 2) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
      for (double r : res)
        rep.max_deviation = std::max(rep.max_deviation, std::fabs(r - rep.constant));
    }
    rep.tolerance = tol > 0.0 ? tol : spec.rel_tol * std::max(rep.scale, 1e-300);
    rep.within_tolerance = rep.max_deviation <= rep.tolerance;
    return rep;
  }

  double lemma_sup_constant(double s, const ParabolicCylinder& Q, const QuadratureSpec& spec)
  {
    spec.validate();
    if (!Q.valid())
      throw ArgumentError("lemma_sup_constant: invalid cylinder");
    const double T = Q.t_hi - Q.t_lo;
    auto pieces = lag_pieces(0.0, T, std::numeric_limits<double>::infinity(), spec);
    return lag_integral(pieces, s, kLagOrder, [](double) { return 1.0; }) / std::tgamma(s);
  }

}
