#include "fracheat/kernel.h"
#include "fracheat/errors.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace fracheat {

  namespace {

    double norm2(std::span<const double> v)
    {
      double s = 0.0;
      for (double x : v)
        s += x * x;
      return s;
    }

    void check_dim(const FracParams& p, std::span<const double> v)
    {
      if (static_cast<int>(v.size()) != p.n)
        throw ArgumentError("vector length " + std::to_string(v.size()) + " does not match n = "
                            + std::to_string(p.n));
    }

    double kappa(const FracParams& p) { return 0.5 * p.n + 1.0 - p.s; }

    double logsumexp(const std::vector<double>& a)
    {
      double m = *std::max_element(a.begin(), a.end());
      if (!std::isfinite(m))
        return m;
      double acc = 0.0;
      for (double v : a)
        acc += std::exp(v - m);
      return m + std::log(acc);
    }

  }

  double eval_kernel(const FracParams& p, std::span<const double> dx, double dt)
  {
    check_dim(p, dx);
    if (!(dt > 0.0))
      return 0.0;
    double e = -norm2(dx) / (4.0 * dt);
    // exp underflows to 0 on its own; keep the power separate so tiny dt does not overflow first
    return p.c_ns * std::exp(e - kappa(p) * std::log(dt));
  }

  double log_kernel(const FracParams& p, std::span<const double> dx, double dt)
  {
    check_dim(p, dx);
    if (!(dt > 0.0))
      return -std::numeric_limits<double>::infinity();
    return std::log(p.c_ns) - kappa(p) * std::log(dt) - norm2(dx) / (4.0 * dt);
  }

  std::vector<double> eval_kernel_grad_x(const FracParams& p, std::span<const double> dx, double dt)
  {
    double g = eval_kernel(p, dx, dt);
    std::vector<double> out(dx.size(), 0.0);
    if (g == 0.0)
      return out;
    for (std::size_t i = 0; i < dx.size(); ++i)
      out[i] = -g * dx[i] / (2.0 * dt);
    return out;
  }

  std::vector<double> eval_kernel_hess_x(const FracParams& p, std::span<const double> dx, double dt)
  {
    double g = eval_kernel(p, dx, dt);
    std::size_t n = dx.size();
    std::vector<double> h(n * n, 0.0);
    if (g == 0.0)
      return h;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        h[i * n + j] = g * ((i == j ? -1.0 / (2.0 * dt) : 0.0) + dx[i] * dx[j] / (4.0 * dt * dt));
    return h;
  }

  double eval_kernel_dt(const FracParams& p, std::span<const double> dx, double dt)
  {
    double g = eval_kernel(p, dx, dt);
    if (g == 0.0)
      return 0.0;
    return g * (norm2(dx) / (4.0 * dt * dt) - kappa(p) / dt);
  }

  DirectionalFrame make_frame(const FracParams& p, std::span<const double> center)
  {
    check_dim(p, center);
    DirectionalFrame f;
    f.center.assign(center.begin(), center.end());
    f.delta = 1.0 / std::sqrt(static_cast<double>(p.n));
    const double comp = 1.0 / p.n;
    const std::size_t count = std::size_t(1) << p.n;
    f.etas.reserve(count);
    // pattern bits read most-significant first so that the list is lexicographic (+ before -)
    for (std::size_t j = 0; j < count; ++j) {
      std::vector<double> eta(p.n);
      for (int i = 0; i < p.n; ++i)
        eta[i] = (j >> (p.n - 1 - i)) & 1u ? -comp : comp;
      f.etas.push_back(std::move(eta));
    }
    return f;
  }

  std::size_t orthant_index(std::span<const double> d)
  {
    std::size_t j = 0;
    const std::size_t n = d.size();
    for (std::size_t i = 0; i < n; ++i)
      if (d[i] < 0.0)
        j |= std::size_t(1) << (n - 1 - i);
    return j;
  }

  double cosine_gap(const DirectionalFrame& frame, std::span<const double> y)
  {
    const std::size_t n = frame.center.size();
    if (y.size() != n)
      throw ArgumentError("cosine_gap: dimension mismatch");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i)
      d[i] = y[i] - frame.center[i];
    double r = std::sqrt(norm2(d));
    if (r < 1.0 - 1e-12)
      throw DomainError("cosine_gap requires |y - center| >= 1, got " + std::to_string(r));
    const auto& eta = frame.etas[orthant_index(d)];
    // |d|^2 - |d - eta|^2 = 2 d.eta - |eta|^2, written out to avoid cancellation
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      dot += d[i] * eta[i];
    double d2 = frame.delta * frame.delta;
    return 2.0 * dot - d2 - d2 * r;
  }

  double key_constant(int n, double power)
  {
    return std::pow(4.0 * n * power / std::numbers::e, power);
  }

  DerivativeConstants derivative_constants(const FracParams& p)
  {
    // With X = |d|/tau >= 1/tau (|d| >= 1):
    //   |grad|  <= G X/2,   |hess| <= G (X/2 + X^2/4),   dt G <= G X^2/4,
    // and G(d) <= e^{-X/(4n)} G(d - eta_j); take sup over X of each polynomial times e^{-X/(4n)}.
    double a = 4.0 * p.n / std::numbers::e;   // sup X e^{-X/4n}
    double b = 64.0 * p.n * p.n / (std::numbers::e * std::numbers::e);   // sup X^2 e^{-X/4n}
    return {0.5 * a, 0.5 * a + 0.25 * b, 0.25 * b};
  }

  KeyInequalityResult check_key_inequality(const FracParams& p, const DirectionalFrame& frame,
                                           std::span<const double> y, double tau, double power,
                                           double slack, double rate_factor)
  {
    check_dim(p, y);
    if (!(tau > 0.0))
      throw DomainError("check_key_inequality requires tau > 0");
    if (!(power > 0.0))
      throw DomainError("check_key_inequality requires power > 0");
    const int n = p.n;
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i)
      d[i] = y[i] - frame.center[i];
    const double r = std::sqrt(norm2(d));
    if (r < 1.0 - 1e-12)
      throw DomainError("check_key_inequality requires |y - center| >= 1, got " + std::to_string(r));
    if (rate_factor < 0.0)
      rate_factor = 1.0 / (4.0 * n);

    const double d2 = frame.delta * frame.delta;
    const double X = r / tau;

    KeyInequalityResult res;
    // general form, everything in logs; exponent difference via 2 d.eta - |eta|^2
    {
      const auto& eta = frame.etas[orthant_index(d)];
      double dot = 0.0;
      for (int i = 0; i < n; ++i)
        dot += d[i] * eta[i];
      res.general_margin = power * std::log(4.0 * n * power / std::numbers::e) - power * std::log(X)
                           + (2.0 * dot - d2) / (4.0 * tau);
    }

    // log( sum_k G(d + eta_k) / G(d) )
    std::vector<double> terms;
    terms.reserve(frame.etas.size());
    for (const auto& eta : frame.etas) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i)
        dot += d[i] * eta[i];
      terms.push_back((-2.0 * dot - d2) / (4.0 * tau));
    }
    const double log_ratio = logsumexp(terms);
    res.lemma_margin = log_ratio - rate_factor * X;

    const auto C = derivative_constants(p);
    const double inf = std::numeric_limits<double>::infinity();
    double gm = inf;
    for (int i = 0; i < n; ++i) {
      double f = std::fabs(d[i]) / (2.0 * tau);
      if (f > 0.0)
        gm = std::min(gm, std::log(C.grad) + log_ratio - std::log(f));
    }
    res.grad_margin = gm;
    double hm = inf;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double f = std::fabs((i == j ? -1.0 / (2.0 * tau) : 0.0) + d[i] * d[j] / (4.0 * tau * tau));
        if (f > 0.0)
          hm = std::min(hm, std::log(C.hess) + log_ratio - std::log(f));
      }
    res.hess_margin = hm;
    double bracket = r * r / (4.0 * tau * tau) - (0.5 * n + 1.0 - p.s) / tau;
    res.dt_margin = bracket > 0.0 ? std::log(C.dt) + log_ratio - std::log(bracket) : inf;

    res.margin = std::min({res.general_margin, res.lemma_margin, res.grad_margin, res.hess_margin,
                           res.dt_margin});
    res.pass = res.margin >= -slack;
    return res;
  }

  KeySuiteResult key_inequality_suite(const FracParams& p, long samples, unsigned long long seed, double slack)
  {
    if (samples < 1)
      throw DomainError("key_inequality_suite needs at least one sample");
    const int n = p.n;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0), L(0.0, 1.0);
    std::normal_distribution<double> N01;
    KeySuiteResult out;
    out.min_margin = std::numeric_limits<double>::infinity();
    std::vector<double> c(n), y(n), dir(n);
    for (long k = 0; k < samples; ++k) {
      for (auto& v : c)
        v = U(rng);
      double nrm = 0.0;
      do {
        nrm = 0.0;
        for (auto& v : dir) {
          v = N01(rng);
          nrm += v * v;
        }
      } while (nrm < 1e-24);
      nrm = std::sqrt(nrm);
      const double r = std::pow(10.0, 2.0 * L(rng));
      const double tau = std::pow(10.0, -4.0 + 7.0 * L(rng));
      const double power = L(rng) < 0.5 ? 1.0 : 2.0;
      for (int i = 0; i < n; ++i)
        y[i] = c[i] + std::max(r, 1.0) * dir[i] / nrm;
      const auto frame = make_frame(p, c);
      // rounding can put |y - c| a hair under 1
      double rr = 0.0;
      for (int i = 0; i < n; ++i)
        rr += (y[i] - c[i]) * (y[i] - c[i]);
      if (rr < 1.0)
        for (int i = 0; i < n; ++i)
          y[i] = c[i] + (y[i] - c[i]) * (1.0 + 1e-15) / std::sqrt(rr);
      const auto res = check_key_inequality(p, frame, y, tau, power, slack);
      if (cosine_gap(frame, y) < -slack * (1.0 + r * r))
        ++out.gap_violations;
      ++out.samples;
      if (!res.pass)
        ++out.violations;
      if (res.margin < out.min_margin) {
        out.min_margin = res.margin;
        out.worst_y = y;
        out.worst_center = c;
        out.worst_tau = tau;
        out.worst_power = power;
      }
    }
    return out;
  }

}
