#include "fracheat/quadrature.h"
#include "fracheat/errors.h"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace fracheat {

  void QuadratureSpec::validate() const
  {
    if (!(r_cut > 0.0) || !(r_max > 0.0) || !(r_cut < r_max))
      throw ConfigError("quadrature: need 0 < r_cut < r_max");
    if (panels_per_decade < 1)
      throw ConfigError("quadrature: panels_per_decade must be >= 1");
    if (gh_order < 4)
      throw ConfigError("quadrature: gh_order must be >= 4");
    if (!(rel_tol > 0.0))
      throw ConfigError("quadrature: rel_tol must be > 0");
    if (gh_cap_1d < gh_order || gh_cap_1d > 640)
      throw ConfigError("quadrature: gh_cap_1d must lie in [gh_order, 640]");
    if (conv_angles < 8 || conv_panels_per_decade < 1)
      throw ConfigError("quadrature: conv_angles >= 8 and conv_panels_per_decade >= 1 required");
  }

  namespace {

    // sum_k h_k(z)^2 and psi_n, psi_{n-1} from Hermite functions psi_k = h_k e^{-z^2/2}, which
    // stay finite where the bare polynomials overflow
    struct HermiteEval {
      double psi_n, psi_nm1, sumsq;
    };

    HermiteEval hermite_functions(int n, double z)
    {
      const double pim4 = 0.7511255444649425;   // pi^{-1/4}
      double p1 = pim4 * std::exp(-0.5 * z * z), p2 = 0.0, sumsq = 0.0;
      for (int j = 0; j < n; ++j) {
        sumsq += p1 * p1;
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
      }
      return {p1, p2, sumsq};
    }

    Rule make_hermite(int n)
    {
      // Golub-Welsch for starting nodes, Newton on psi_n, Christoffel weights
      Eigen::VectorXd diag = Eigen::VectorXd::Zero(n), sub(std::max(n - 1, 1));
      for (int k = 1; k < n; ++k)
        sub(k - 1) = std::sqrt(0.5 * k);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      es.computeFromTridiagonal(diag, sub.head(std::max(n - 1, 0)), Eigen::EigenvaluesOnly);
      Rule r;
      r.x.assign(n, 0.0);
      r.w.assign(n, 0.0);
      for (int i = 0; i < n; ++i) {
        double z = es.eigenvalues()(i);
        for (int it = 0; it < 4; ++it) {
          HermiteEval h = hermite_functions(n, z);
          if (h.psi_nm1 == 0.0)
            break;
          const double dz = h.psi_n / (std::sqrt(2.0 * n) * h.psi_nm1);
          z -= dz;
          if (std::fabs(dz) <= 1e-15 * std::max(1.0, std::fabs(z)))
            break;
        }
        r.x[i] = z;
      }
      // exact symmetry
      for (int i = 0; i < n / 2; ++i) {
        const double z = 0.5 * (r.x[n - 1 - i] - r.x[i]);
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
      }
      if (n % 2 == 1)
        r.x[n / 2] = 0.0;
      for (int i = 0; i < n; ++i) {
        HermiteEval h = hermite_functions(n, r.x[i]);
        // w = 1 / sum h_k^2 = e^{-z^2} / sum psi_k^2
        r.w[i] = h.sumsq > 0.0 ? std::exp(-r.x[i] * r.x[i]) / h.sumsq : 0.0;
      }
      return r;
    }

    Rule make_legendre(int n)
    {
      Rule r;
      r.x.assign(n, 0.0);
      r.w.assign(n, 0.0);
      const int m = (n + 1) / 2;
      for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
          double p1 = 1.0, p2 = 0.0;
          for (int j = 0; j < n; ++j) {
            double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
          }
          pp = n * (z * p1 - p2) / (z * z - 1.0);
          double z1 = z;
          z = z1 - p1 / pp;
          if (std::fabs(z - z1) <= 1e-15)
            break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
      }
      return r;
    }

    Rule make_jacobi(int n, double a, double b)
    {
      // Golub-Welsch on the Jacobi matrix
      Eigen::VectorXd diag(n), sub(std::max(n - 1, 1));
      for (int k = 0; k < n; ++k) {
        double s = 2.0 * k + a + b;
        diag(k) = (k == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
      }
      for (int k = 1; k < n; ++k) {
        double s = 2.0 * k + a + b;
        sub(k - 1) = std::sqrt(4.0 * k * (k + a) * (k + b) * (k + a + b) / (s * s * (s + 1.0) * (s - 1.0)));
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      es.computeFromTridiagonal(diag, sub.head(std::max(n - 1, 0)), Eigen::ComputeEigenvectors);
      double mu0 = std::exp((a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0)
                            - std::lgamma(a + b + 2.0));
      Rule r;
      r.x.resize(n);
      r.w.resize(n);
      for (int i = 0; i < n; ++i) {
        r.x[i] = es.eigenvalues()(i);
        double v = es.eigenvectors()(0, i);
        r.w[i] = mu0 * v * v;
      }
      return r;
    }

    std::mutex g_rule_mutex;

  }

  const Rule& gauss_hermite(int order)
  {
    if (order < 1 || order > 640)
      throw ArgumentError("gauss_hermite: order out of range");
    static std::map<int, Rule> cache;
    std::lock_guard<std::mutex> lock(g_rule_mutex);
    auto it = cache.find(order);
    if (it == cache.end())
      it = cache.emplace(order, make_hermite(order)).first;
    return it->second;
  }

  const Rule& gauss_legendre(int order)
  {
    if (order < 1 || order > 2000)
      throw ArgumentError("gauss_legendre: order out of range");
    static std::map<int, Rule> cache;
    std::lock_guard<std::mutex> lock(g_rule_mutex);
    auto it = cache.find(order);
    if (it == cache.end())
      it = cache.emplace(order, make_legendre(order)).first;
    return it->second;
  }

  const Rule& gauss_jacobi(int order, double alpha, double beta)
  {
    if (order < 1 || order > 400 || !(alpha > -1.0) || !(beta > -1.0))
      throw ArgumentError("gauss_jacobi: bad parameters");
    static std::map<std::tuple<int, double, double>, Rule> cache;
    std::lock_guard<std::mutex> lock(g_rule_mutex);
    auto key = std::make_tuple(order, alpha, beta);
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, make_jacobi(order, alpha, beta)).first;
    return it->second;
  }

  double pairwise_sum(std::span<const double> v)
  {
    if (v.size() <= 8) {
      double s = 0.0;
      for (double x : v)
        s += x;
      return s;
    }
    std::size_t h = v.size() / 2;
    return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
  }

  GaussianMeanProbe make_probe(int n, double r, int order)
  {
    const Rule& gh = gauss_hermite(order);
    const double inv = 1.0 / std::sqrt(std::numbers::pi);
    GaussianMeanProbe probe;
    probe.r = r;
    std::size_t total = 1;
    for (int d = 0; d < n; ++d)
      total *= gh.size();
    std::vector<int> idx(n, 0);
    for (std::size_t k = 0; k < total; ++k) {
      double w = 1.0;
      std::vector<double> off(n);
      for (int d = 0; d < n; ++d) {
        w *= gh.w[idx[d]] * inv;
        off[d] = -2.0 * std::sqrt(r) * gh.x[idx[d]];
      }
      probe.weights.push_back(w);
      probe.offsets.push_back(std::move(off));
      for (int d = 0; d < n; ++d) {
        if (++idx[d] < order)
          break;
        idx[d] = 0;
      }
    }
    return probe;
  }

  namespace {

    struct GhValue {
      double value = 0.0;
      double abs = 0.0;
      long evals = 0;
    };

    // one tensor Gauss-Hermite pass; importance-shifted when loc is given
    GhValue gh_pass(const FieldHandle& u, std::span<const double> x, double tau, double a, int order,
                    const std::optional<Localization>& loc)
    {
      const int n = u.n;
      const Rule& gh = gauss_hermite(order);
      const double inv = 1.0 / std::sqrt(std::numbers::pi);
      std::vector<double> m(x.begin(), x.end());
      double q = a;
      bool importance = false;
      if (loc && loc->lag > 0.0) {
        const double v = loc->lag;
        q = a * v / (a + v);
        for (int d = 0; d < n; ++d)
          m[d] = (v * x[d] + a * loc->center[d]) / (a + v);
        importance = true;
      }
      const double sq = 2.0 * std::sqrt(q);
      const double log_pref = importance ? 0.5 * n * std::log(q / a) : 0.0;

      std::size_t total = 1;
      for (int d = 0; d < n; ++d)
        total *= gh.size();
      std::vector<int> idx(n, 0);
      std::vector<double> y(n);
      std::vector<double> terms(total), aterms(total);
      GhValue out;
      for (std::size_t k = 0; k < total; ++k) {
        double w = 1.0, z2 = 0.0;
        for (int d = 0; d < n; ++d) {
          const double z = gh.x[idx[d]];
          w *= gh.w[idx[d]] * inv;
          z2 += z * z;
          y[d] = importance ? m[d] + sq * z : x[d] - sq * z;
        }
        double t = 0.0;
        if (w > 0.0) {
          double val = u.eval(y, tau);
          ++out.evals;
          if (importance) {
            double dx2 = 0.0;
            for (int d = 0; d < n; ++d)
              dx2 += (x[d] - y[d]) * (x[d] - y[d]);
            val *= std::exp(log_pref - dx2 / (4.0 * a) + z2);
          }
          t = w * val;
        }
        terms[k] = t;
        aterms[k] = std::fabs(t);
        for (int d = 0; d < n; ++d) {
          if (++idx[d] < order)
            break;
          idx[d] = 0;
        }
      }
      out.value = pairwise_sum(terms);
      out.abs = pairwise_sum(aterms);
      return out;
    }

  }

  double gaussian_mean(const FieldHandle& u, std::span<const double> x, double t, double r,
                       const QuadratureSpec& spec)
  {
    if (!(r > 0.0))
      throw DomainError("gaussian_mean requires r > 0");
    return gh_pass(u, x, t - r, r, spec.gh_order, std::nullopt).value;
  }

  int gh_order_cap(int n, const QuadratureSpec& spec)
  {
    int cap;
    if (n == 1)
      cap = spec.gh_cap_1d;
    else if (n == 2)
      cap = 160;
    else
      cap = static_cast<int>(std::floor(std::pow(64000.0, 1.0 / n)));
    return std::max(cap, spec.gh_order);
  }

  MeanResult spatial_mean(const FieldHandle& u, std::span<const double> x, double tau, double a,
                          const QuadratureSpec& spec, int start_order)
  {
    MeanResult res;
    if (u.zero_at_time(tau))
      return res;
    if (a <= 0.0) {
      res.value = u.eval(x, tau);
      res.abs_scale = std::fabs(res.value);
      res.evals = 1;
      return res;
    }
    if (spec.use_heat_flow && u.heat_flow) {
      res.value = u.heat_flow(x, tau, a);
      res.abs_scale = std::fabs(res.value);
      res.evals = 1;
      return res;
    }
    std::optional<Localization> loc;
    if (u.localize)
      loc = u.localize(tau);

    const int cap = gh_order_cap(u.n, spec);
    int N = std::min(std::max(spec.gh_order, start_order), cap);
    // always keep one comparison below the cap
    if (N == cap && cap > spec.gh_order)
      N = std::max(spec.gh_order, cap / 2);
    GhValue A = gh_pass(u, x, tau, a, N, loc);
    res.evals += A.evals;
    res.discrepancy = std::numeric_limits<double>::infinity();
    for (;;) {
      int N2 = std::min(2 * N, cap);
      if (N2 == N) {
        res.value = A.value;
        res.abs_scale = A.abs;
        res.resolved = false;
        res.order = N;
        return res;
      }
      GhValue B = gh_pass(u, x, tau, a, N2, loc);
      res.evals += B.evals;
      double tol = spec.rel_tol * std::max(A.abs, B.abs);
      res.discrepancy = std::fabs(A.value - B.value);
      if (res.discrepancy <= tol) {
        res.value = B.value;
        res.abs_scale = B.abs;
        res.order = N;
        return res;
      }
      A = B;
      N = N2;
    }
  }

  int nodes_per_panel(double log_width, double exponent, double rel_tol)
  {
    // the weight e^{c rho} over one panel is a polynomial of degree d to rel_tol;
    // together with a degree-8 integrand Gauss-Legendre needs (8 + d + 2)/2 nodes
    const double x = std::fabs(exponent) * log_width;
    int d = 0;
    double term = x;   // x^{d+1}/(d+1)!
    while (term > rel_tol && d < 40) {
      ++d;
      term *= x / (d + 1);
    }
    return std::max(4, (8 + d + 2) / 2);
  }

  std::vector<LagPanel> log_panels(double lo, double hi, int per_decade, double power, double rel_tol)
  {
    std::vector<LagPanel> out;
    if (!(hi > lo) || !(lo > 0.0))
      return out;
    const double decades = std::log10(hi / lo);
    const int count = std::max(1, static_cast<int>(std::ceil(decades * per_decade - 1e-9)));
    const double h = std::log(hi / lo) / count;
    const int m = nodes_per_panel(h, power + 1.0, rel_tol);
    const Rule& gl = gauss_legendre(m);
    const double l0 = std::log(lo);
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
      LagPanel pnl;
      pnl.r_lo = k == 0 ? lo : out.back().r_hi;
      pnl.r_hi = k == count - 1 ? hi : std::exp(l0 + (k + 1) * h);
      const double a = std::log(pnl.r_lo), b = std::log(pnl.r_hi);
      for (int i = 0; i < m; ++i) {
        double rho = 0.5 * (a + b) + 0.5 * (b - a) * gl.x[i];
        double r = std::exp(rho);
        pnl.r.push_back(r);
        pnl.w.push_back(0.5 * (b - a) * gl.w[i] * std::exp((power + 1.0) * rho));
      }
      out.push_back(std::move(pnl));
    }
    return out;
  }

  LagPanel endpoint_panel(double a, double b, double s, double power, int order)
  {
    const Rule& gj = gauss_jacobi(order, s - 1.0, 0.0);
    LagPanel pnl;
    pnl.r_lo = a;
    pnl.r_hi = b;
    const double f = std::pow(0.5 * (b - a), s);
    for (std::size_t i = 0; i < gj.size(); ++i) {
      double r = a + 0.5 * (b - a) * (1.0 + gj.x[i]);
      pnl.r.push_back(r);
      // divide the Jacobi weight back out: exact when g carries a (b - r)^{s-1} factor
      pnl.w.push_back(f * gj.w[i] * std::pow(r, power) * std::pow(b - r, 1.0 - s));
    }
    return pnl;
  }

  LagPanel origin_panel(double h, double s, int order)
  {
    const Rule& gj = gauss_jacobi(order, 0.0, s - 1.0);
    LagPanel pnl;
    pnl.r_lo = 0.0;
    pnl.r_hi = h;
    const double f = std::pow(0.5 * h, s);
    for (std::size_t i = 0; i < gj.size(); ++i) {
      pnl.r.push_back(0.5 * h * (1.0 + gj.x[i]));
      pnl.w.push_back(f * gj.w[i]);
    }
    return pnl;
  }

  std::vector<LagPanel> time_lag_panels(const QuadratureSpec& spec, double s)
  {
    spec.validate();
    return log_panels(spec.r_cut, spec.r_max, spec.panels_per_decade, -1.0 - s, spec.rel_tol);
  }

  double heat_operator_fd(const FieldHandle& u, std::span<const double> x, double t)
  {
    const int n = u.n;
    double xs = 0.0;
    for (double v : x)
      xs = std::max(xs, std::fabs(v));
    const double h = std::max(1e-4, std::sqrt(std::numeric_limits<double>::epsilon()) * xs);
    double k = 1e-4 * std::max(1.0, std::fabs(t));
    if (u.time_floor) {
      if (t <= *u.time_floor)
        return 0.0;
      k = std::min(k, 0.25 * (t - *u.time_floor));
    }
    const double u0 = u.eval(x, t);
    std::vector<double> y(x.begin(), x.end());
    double lap = 0.0;
    for (int d = 0; d < n; ++d) {
      double v[4];
      const double off[4] = {-2.0 * h, -h, h, 2.0 * h};
      for (int j = 0; j < 4; ++j) {
        y[d] = x[d] + off[j];
        v[j] = u.eval(y, t);
      }
      y[d] = x[d];
      lap += (16.0 * (v[1] + v[2]) - (v[0] + v[3]) - 30.0 * u0) / (12.0 * h * h);
    }
    const double dt = (3.0 * u0 - 4.0 * u.eval(x, t - k) + u.eval(x, t - 2.0 * k)) / (2.0 * k);
    return dt - lap;
  }

  InnerResult inner_from_heat(double heat, double u0, double r_cut, double s, const MeanFn& mean,
                              const QuadratureSpec& spec)
  {
    InnerResult res;
    res.heat = heat;
    res.value = heat * std::pow(r_cut, 1.0 - s) / (1.0 - s);

    // Taylor-remainder estimate: redo with r_cut/2 and r_cut/4 plus the freed lag pieces.
    // The remainder scales like r_cut^{2-s}; two Richardson values give the error of the
    // extrapolated one.
    int hint = 0;
    auto piece = [&](double lo, double hi) {
      std::vector<double> terms;
      for (const auto& pn : log_panels(lo, hi, 1, -1.0 - s, spec.rel_tol))
        for (std::size_t i = 0; i < pn.r.size(); ++i) {
          auto m = mean(pn.r[i], hint);
          hint = m.order;
          terms.push_back(pn.w[i] * (u0 - m.value));
        }
      return pairwise_sum(terms);
    };
    const double q = std::pow(2.0, 2.0 - s);
    const double v1 = res.value;
    const double v2 = heat * std::pow(0.5 * r_cut, 1.0 - s) / (1.0 - s) + piece(0.5 * r_cut, r_cut);
    const double v4 = heat * std::pow(0.25 * r_cut, 1.0 - s) / (1.0 - s) + piece(0.25 * r_cut, 0.5 * r_cut)
                      + (v2 - heat * std::pow(0.5 * r_cut, 1.0 - s) / (1.0 - s));
    const double e1 = (q * v2 - v1) / (q - 1.0);
    const double e2 = (q * v4 - v2) / (q - 1.0);
    res.extrapolated = e2;
    res.error = std::fabs(e1 - e2) + 1e-14 * std::fabs(v1);
    return res;
  }

  InnerResult inner_asymptotic(const FieldHandle& u, std::span<const double> x, double t,
                               const QuadratureSpec& spec, const FracParams& p, double r_cut)
  {
    const double rc = r_cut > 0.0 ? r_cut : spec.r_cut;
    MeanFn mean = [&](double r, int hint) { return spatial_mean(u, x, t - r, r, spec, hint); };
    return inner_from_heat(heat_operator_fd(u, x, t), u.eval(x, t), rc, p.s, mean, spec);
  }

}
