#include "doctest.h"
#include "oracles.h"

#include "fracheat/errors.h"
#include "fracheat/frac_params.h"
#include "fracheat/kernel.h"

#include <cmath>
#include <vector>

using namespace fracheat;

TEST_CASE("gamma of -s: closed form at one half")
{
  CHECK(gamma_abs_neg_s(0.5) == doctest::Approx(2.0 * std::sqrt(oracle::pi)).epsilon(1e-14));
  CHECK(gamma_abs_neg_s(0.5) == doctest::Approx(3.5449077018).epsilon(1e-10));
}

TEST_CASE("gamma of -s: matches the Lanczos reference")
{
  for (double s : {0.05, 0.25, 0.5, 0.75, 0.9, 0.99}) {
    CAPTURE(s);
    CHECK(oracle::rel(gamma_abs_neg_s(s), std::fabs(oracle::gamma(-s))) < 1e-10);
  }
}

TEST_CASE("gamma of -s grows monotonically towards s = 1")
{
  double prev = 0.0;
  for (double s = 0.9; s <= 0.999 + 1e-12; s += 0.001) {
    const double g = gamma_abs_neg_s(s);
    CHECK(g > prev);
    prev = g;
  }
  CHECK(prev > 900.0);   // ~ 1/(1-s)
}

TEST_CASE("normalisation constant")
{
  const auto p = FracParams::make(1, 0.5);
  CHECK(p.consistent());
  std::vector<double> z{0.0};
  CHECK(eval_kernel(p, z, 1.0) == doctest::Approx(1.0 / (4.0 * oracle::pi)).epsilon(1e-13));
  for (int n = 1; n <= 4; ++n)
    for (double s : {0.1, 0.3, 0.5, 0.7, 0.95}) {
      CAPTURE(n);
      CAPTURE(s);
      const auto q = FracParams::make(n, s);
      CHECK(q.consistent(1e-12));
      CHECK(oracle::rel(q.c_ns, oracle::kernel_constant(n, s)) < 1e-10);
    }
}

TEST_CASE("parameter validation")
{
  CHECK_THROWS_AS(FracParams::make(1, 0.0), DomainError);
  CHECK_THROWS_AS(FracParams::make(1, 1.0), DomainError);
  CHECK_THROWS_AS(FracParams::make(0, 0.5), DomainError);
  std::vector<double> z{0.0, 0.0};
  CHECK_THROWS(eval_kernel(FracParams::make(1, 0.5), z, 1.0));
}

TEST_CASE("kernel values agree with the direct formula")
{
  auto g = oracle::rng(11);
  for (int i = 0; i < 200; ++i) {
    const int n = 1 + i % 3;
    const double s = oracle::uniform(g, 0.05, 0.95);
    const auto p = FracParams::make(n, s);
    std::vector<double> dx(n);
    for (auto& v : dx)
      v = oracle::uniform(g, -3, 3);
    const double dt = std::pow(10.0, oracle::uniform(g, -2, 2));
    CHECK(oracle::rel(eval_kernel(p, dx, dt), oracle::kernel(n, s, dx, dt)) < 1e-11);
  }
}

TEST_CASE("property: causality")
{
  auto g = oracle::rng(12);
  for (int i = 0; i < 500; ++i) {
    const int n = 1 + i % 3;
    const auto p = FracParams::make(n, oracle::uniform(g, 0.05, 0.95));
    std::vector<double> dx(n);
    for (auto& v : dx)
      v = oracle::uniform(g, -5, 5);
    const double dt = i % 5 == 0 ? 0.0 : -std::pow(10.0, oracle::uniform(g, -3, 3));
    CHECK(eval_kernel(p, dx, dt) == 0.0);
    CHECK(eval_kernel_dt(p, dx, dt) == 0.0);
    for (double v : eval_kernel_grad_x(p, dx, dt))
      CHECK(v == 0.0);
  }
  std::vector<double> one{1.0};
  CHECK(eval_kernel(FracParams::make(1, 0.5), one, -1.0) == 0.0);
}

TEST_CASE("property: parabolic homogeneity")
{
  auto g = oracle::rng(13);
  for (int i = 0; i < 300; ++i) {
    const int n = 1 + i % 3;
    const double s = oracle::uniform(g, 0.05, 0.95);
    const auto p = FracParams::make(n, s);
    std::vector<double> dx(n);
    for (auto& v : dx)
      v = oracle::uniform(g, -1, 1);
    const double dt = oracle::uniform(g, 0.2, 2.0);
    const double lam = i < 3 ? std::array<double, 3>{0.5, 2.0, 10.0}[i] : std::pow(10.0, oracle::uniform(g, -1, 1));
    std::vector<double> ldx(dx);
    for (auto& v : ldx)
      v *= lam;
    const double a = eval_kernel(p, ldx, lam * lam * dt);
    const double b = std::pow(lam, -(n + 2.0 - 2.0 * s)) * eval_kernel(p, dx, dt);
    CHECK(oracle::rel(a, b) < 1e-12);
  }
}

TEST_CASE("spatial mass of the kernel")
{
  for (double s : {0.3, 0.7})
    for (double tau : {0.1, 1.0, 10.0}) {
      CAPTURE(s);
      CAPTURE(tau);
      // n = 1: Simpson over +-12 sqrt(tau)
      const auto p1 = FracParams::make(1, s);
      const double L = 12.0 * std::sqrt(tau);
      const double m1 = oracle::simpson(
          [&](double y) {
            std::vector<double> d{y};
            return eval_kernel(p1, d, tau);
          },
          -L, L, 4000);
      CHECK(oracle::rel(m1, p1.c_ns * std::sqrt(4.0 * oracle::pi) * std::pow(tau, s - 1.0)) < 1e-8);
      // n = 2: product Simpson
      const auto p2 = FracParams::make(2, s);
      const double m2 = oracle::simpson(
          [&](double y1) {
            return oracle::simpson(
                [&](double y2) {
                  std::vector<double> d{y1, y2};
                  return eval_kernel(p2, d, tau);
                },
                -L, L, 600);
          },
          -L, L, 600);
      CHECK(oracle::rel(m2, p2.c_ns * 4.0 * oracle::pi * std::pow(tau, s - 1.0)) < 1e-8);
    }
}

TEST_CASE("gradient: zero at the origin, odd, matches finite differences")
{
  const auto p = FracParams::make(1, 0.25);
  std::vector<double> z{0.0};
  CHECK(eval_kernel_grad_x(p, z, 1.0)[0] == 0.0);
  const double fd = oracle::d1(
      [&](double x) {
        std::vector<double> d{x};
        return eval_kernel(p, d, 1.0);
      },
      1.0, 1e-5);
  std::vector<double> one{1.0};
  CHECK(oracle::rel(eval_kernel_grad_x(p, one, 1.0)[0], fd) < 1e-6);

  auto g = oracle::rng(14);
  for (int i = 0; i < 200; ++i) {
    const int n = 1 + i % 3;
    const auto q = FracParams::make(n, oracle::uniform(g, 0.05, 0.95));
    std::vector<double> dx(n), mdx(n);
    for (int a = 0; a < n; ++a) {
      dx[a] = oracle::uniform(g, -2, 2);
      mdx[a] = -dx[a];
    }
    const double dt = std::pow(10.0, oracle::uniform(g, -2, 2));
    const auto gp = eval_kernel_grad_x(q, dx, dt);
    const auto gm = eval_kernel_grad_x(q, mdx, dt);
    for (int a = 0; a < n; ++a) {
      CHECK(gm[a] == -gp[a]);
      const double h = 1e-5 * std::sqrt(dt);
      const double f = oracle::d1(
          [&](double v) {
            auto d = dx;
            d[a] = v;
            return eval_kernel(q, d, dt);
          },
          dx[a], h);
      const double scale = eval_kernel(q, dx, dt) / std::sqrt(dt);
      CHECK(std::fabs(gp[a] - f) <= 1e-5 * std::max(std::fabs(f), scale));
    }
  }
}

TEST_CASE("hessian: symmetric, trace at origin, matches finite differences")
{
  auto g = oracle::rng(15);
  for (int i = 0; i < 150; ++i) {
    const int n = 1 + i % 3;
    const auto q = FracParams::make(n, oracle::uniform(g, 0.05, 0.95));
    std::vector<double> dx(n);
    for (auto& v : dx)
      v = oracle::uniform(g, -2, 2);
    const double dt = std::pow(10.0, oracle::uniform(g, -2, 2));
    const auto H = eval_kernel_hess_x(q, dx, dt);
    REQUIRE(H.size() == static_cast<std::size_t>(n * n));
    const double scale = eval_kernel(q, dx, dt) / dt;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        CHECK(H[a * n + b] == H[b * n + a]);
        // d/dx_b of the gradient component a
        const double h = 1e-4 * std::sqrt(dt);
        const double f = oracle::d1(
            [&](double v) {
              auto d = dx;
              d[b] = v;
              return eval_kernel_grad_x(q, d, dt)[a];
            },
            dx[b], h);
        CHECK(std::fabs(H[a * n + b] - f) <= 1e-5 * std::max(std::fabs(f), scale));
      }
    // diagonal against second differences of the kernel itself
    for (int a = 0; a < n; ++a) {
      const double f2 = oracle::d2(
          [&](double v) {
            auto d = dx;
            d[a] = v;
            return eval_kernel(q, d, dt);
          },
          dx[a], 1e-3 * std::sqrt(dt));
      CHECK(std::fabs(H[a * n + a] - f2) <= 1e-5 * std::max(std::fabs(f2), scale));
    }
  }
  for (int n = 1; n <= 3; ++n) {
    const auto q = FracParams::make(n, 0.4);
    std::vector<double> z(n, 0.0);
    const double dt = 0.7;
    const auto H = eval_kernel_hess_x(q, z, dt);
    double tr = 0.0;
    for (int a = 0; a < n; ++a)
      tr += H[a * n + a];
    CHECK(oracle::rel(tr, -n * q.c_ns * std::pow(dt, -(0.5 * n + 2.0 - 0.4)) / 2.0) < 1e-13);
  }
}

TEST_CASE("time derivative: finite differences, sign change, worked value")
{
  auto g = oracle::rng(16);
  for (int i = 0; i < 200; ++i) {
    const int n = 1 + i % 3;
    const auto q = FracParams::make(n, oracle::uniform(g, 0.05, 0.95));
    std::vector<double> dx(n);
    for (auto& v : dx)
      v = oracle::uniform(g, -2, 2);
    const double dt = std::pow(10.0, oracle::uniform(g, -2, 2));
    const double f = oracle::d1([&](double t) { return eval_kernel(q, dx, t); }, dt, 1e-5 * dt);
    CHECK(std::fabs(eval_kernel_dt(q, dx, dt) - f) <= 1e-6 * std::max(std::fabs(f), eval_kernel(q, dx, dt) / dt));
  }
  for (int n = 1; n <= 3; ++n) {
    const double s = 0.3, dt = 0.8;
    const auto q = FracParams::make(n, s);
    std::vector<double> z(n, 0.0);
    CHECK(eval_kernel_dt(q, z, dt) < 0.0);
    const double crit = std::sqrt(4.0 * dt * (0.5 * n + 1.0 - s));
    std::vector<double> far(n, 0.0);
    far[0] = 1.01 * crit;
    CHECK(eval_kernel_dt(q, far, dt) > 0.0);
    far[0] = 0.99 * crit;
    CHECK(eval_kernel_dt(q, far, dt) < 0.0);
  }
  const auto q = FracParams::make(2, 0.5);
  std::vector<double> d{2.0, 0.0};
  // bracket |d|^2/4 - (n/2 + 1 - s) = 1 - 1.5
  CHECK(oracle::rel(eval_kernel_dt(q, d, 1.0), -0.5 * q.c_ns * std::exp(-1.0)) < 1e-13);
}

TEST_CASE("directional frame")
{
  const auto p2 = FracParams::make(2, 0.5);
  std::vector<double> z2{0.0, 0.0};
  const auto f2 = make_frame(p2, z2);
  REQUIRE(f2.etas.size() == 4);
  CHECK(f2.etas[0][0] == doctest::Approx(0.5));
  CHECK(f2.etas[0][1] == doctest::Approx(0.5));

  std::vector<double> z1{0.0};
  const auto f1 = make_frame(FracParams::make(1, 0.5), z1);
  REQUIRE(f1.etas.size() == 2);
  CHECK(f1.etas[0][0] == doctest::Approx(1.0));
  CHECK(f1.etas[1][0] == doctest::Approx(-1.0));

  for (int n = 1; n <= 4; ++n) {
    std::vector<double> c(n, 0.3);
    const auto f = make_frame(FracParams::make(n, 0.5), c);
    REQUIRE(f.etas.size() == (std::size_t{1} << n));
    std::vector<int> seen(f.etas.size(), 0);
    for (std::size_t j = 0; j < f.etas.size(); ++j) {
      double norm = 0.0;
      for (double v : f.etas[j]) {
        CHECK(std::fabs(std::fabs(v) - 1.0 / n) < 1e-14);
        norm += v * v;
      }
      CHECK(std::fabs(std::sqrt(norm) - 1.0 / std::sqrt(n)) < 1e-12 / std::sqrt(n));
      // each eta sits in its own orthant
      seen[orthant_index(f.etas[j])]++;
      CHECK(orthant_index(f.etas[j]) == j);
    }
    for (int v : seen)
      CHECK(v == 1);
  }
}

TEST_CASE("property: cosine bound between a direction and its orthant's eta")
{
  auto g = oracle::rng(17);
  for (int n = 1; n <= 4; ++n) {
    std::vector<double> c(n, 0.0);
    const auto f = make_frame(FracParams::make(n, 0.5), c);
    for (int i = 0; i < 2000; ++i) {
      const auto d = oracle::unit_vector(g, n);
      const auto& eta = f.etas[orthant_index(d)];
      double dot = 0.0, en = 0.0;
      for (int a = 0; a < n; ++a) {
        dot += d[a] * eta[a];
        en += eta[a] * eta[a];
      }
      CHECK(dot / std::sqrt(en) >= 1.0 / std::sqrt(n) - 1e-14);
    }
  }
}

TEST_CASE("cosine gap: worked value and boundary case")
{
  std::vector<double> z{0.0, 0.0};
  const auto f = make_frame(FracParams::make(2, 0.5), z);
  std::vector<double> y{2.0, 2.0};
  // |y|^2 = 8, |y - (0.5,0.5)|^2 = 4.5, delta^2 |y| = 0.5 * 2 sqrt 2
  const double expect = 8.0 - 4.5 - 0.5 * 2.0 * std::sqrt(2.0);
  CHECK(cosine_gap(f, y) == doctest::Approx(expect).epsilon(1e-13));
  CHECK(expect == doctest::Approx(2.0858).epsilon(1e-4));

  for (int n = 1; n <= 4; ++n) {
    std::vector<double> c(n, 0.0);
    const auto fr = make_frame(FracParams::make(n, 0.5), c);
    std::vector<double> diag(n, 1.0 / std::sqrt(n));   // unit distance on the diagonal
    CHECK(cosine_gap(fr, diag) >= -1e-14);
  }
}

TEST_CASE("property: cosine gap is nonnegative for |y - center| >= 1")
{
  auto g = oracle::rng(18);
  long negative = 0;
  for (int i = 0; i < 10000; ++i) {
    const int n = 1 + i % 4;
    std::vector<double> c(n);
    for (auto& v : c)
      v = oracle::uniform(g, -1, 1);
    const auto f = make_frame(FracParams::make(n, 0.5), c);
    const auto d = oracle::unit_vector(g, n);
    const double r = std::pow(10.0, oracle::uniform(g, 0, 2));
    std::vector<double> y(n);
    for (int a = 0; a < n; ++a)
      y[a] = c[a] + r * d[a];
    if (cosine_gap(f, y) < -1e-12 * (1.0 + r * r))
      ++negative;
  }
  CHECK(negative == 0);
}

TEST_CASE("key constant is the supremum of X^p e^{-X/4n}")
{
  for (int n = 1; n <= 3; ++n)
    for (double pw : {1.0, 2.0, 0.5}) {
      double best = 0.0;
      for (int i = 1; i <= 200000; ++i) {
        const double X = i * 1e-3 * n;
        best = std::max(best, std::pow(X, pw) * std::exp(-X / (4.0 * n)));
      }
      CHECK(oracle::rel(key_constant(n, pw), best) < 1e-6);
      CHECK(key_constant(n, pw) >= best * (1.0 - 1e-14));
    }
}

TEST_CASE("key inequality: worked configurations")
{
  const auto p = FracParams::make(2, 0.5);
  std::vector<double> z{0.0, 0.0};
  const auto f = make_frame(p, z);
  std::vector<double> y{-5.0, -2.0};
  CHECK(check_key_inequality(p, f, y, 0.3, 1.0).pass);
  const auto far = check_key_inequality(p, f, y, 1e3, 1.0);
  CHECK(far.pass);
  CHECK(far.margin > 0.0);
}

TEST_CASE("property: key inequality along the diagonal over a tau sweep")
{
  long fails = 0, total = 0;
  for (int n = 1; n <= 3; ++n) {
    const auto p = FracParams::make(n, 0.5);
    std::vector<double> c(n, 0.0);
    const auto f = make_frame(p, c);
    for (double radius : {1.0, 2.0, 10.0})
      for (int sign = 0; sign < (1 << n); ++sign)
        for (int k = 0; k <= 140; ++k) {
          const double tau = std::pow(10.0, -4.0 + 7.0 * k / 140.0);
          std::vector<double> y(n);
          for (int a = 0; a < n; ++a)
            y[a] = ((sign >> a) & 1 ? -1.0 : 1.0) * radius / std::sqrt(n);
          for (double pw : {1.0, 2.0}) {
            ++total;
            if (!check_key_inequality(p, f, y, tau, pw).pass)
              ++fails;
          }
        }
  }
  CHECK(total > 5000);
  CHECK(fails == 0);
}

TEST_CASE("property: randomized key inequality suite")
{
  for (int n = 1; n <= 3; ++n) {
    const auto r = key_inequality_suite(FracParams::make(n, 0.5), 20000, 99 + n);
    CHECK(r.samples == 20000);
    CHECK(r.violations == 0);
    CHECK(r.gap_violations == 0);
    CHECK(r.min_margin >= 0.0);
    // same seed, same answer
    const auto again = key_inequality_suite(FracParams::make(n, 0.5), 20000, 99 + n);
    CHECK(again.min_margin == r.min_margin);
  }
}

TEST_CASE("derivative bounds by the perturbed kernel sum")
{
  auto g = oracle::rng(19);
  for (int i = 0; i < 3000; ++i) {
    const int n = 1 + i % 3;
    const auto p = FracParams::make(n, oracle::uniform(g, 0.1, 0.9));
    std::vector<double> c(n, 0.0);
    const auto f = make_frame(p, c);
    const auto C = derivative_constants(p);
    const auto d = oracle::unit_vector(g, n);
    const double r = std::pow(10.0, oracle::uniform(g, 0, 1.5));
    std::vector<double> dx(n);
    for (int a = 0; a < n; ++a)
      dx[a] = r * d[a];
    const double dt = std::pow(10.0, oracle::uniform(g, -1, 2));
    double sum = 0.0;
    for (const auto& eta : f.etas) {
      std::vector<double> e(n);
      for (int a = 0; a < n; ++a)
        e[a] = dx[a] + eta[a];
      sum += eval_kernel(p, e, dt);
    }
    if (sum < 1e-250)
      continue;
    double gn = 0.0;
    for (double v : eval_kernel_grad_x(p, dx, dt))
      gn += v * v;
    CHECK(std::sqrt(gn) <= C.grad * sum * (1.0 + 1e-10));
    CHECK(std::fabs(eval_kernel_dt(p, dx, dt)) <= C.dt * sum * (1.0 + 1e-10));
    for (double h : eval_kernel_hess_x(p, dx, dt))
      CHECK(std::fabs(h) <= C.hess * sum * (1.0 + 1e-10));
  }
}

TEST_CASE("key inequality: the e^{-|y|/(n tau)} rate fails, the 1/(4n) rate holds")
{
  const auto p = FracParams::make(2, 0.5);
  std::vector<double> z{0.0, 0.0};
  const auto f = make_frame(p, z);
  std::vector<double> y{3.0, 3.0};
  // direct numbers: G(y) = 9.05e-19 vs e^{-|y|/(n tau)} sum_j G(y + eta_j) = 5.19e-22
  double sum = 0.0;
  for (const auto& eta : f.etas) {
    std::vector<double> e{y[0] + eta[0], y[1] + eta[1]};
    sum += oracle::kernel(2, 0.5, e, 0.1);
  }
  const double lhs = oracle::kernel(2, 0.5, y, 0.1);
  const double rhs = std::exp(-std::sqrt(18.0) / (2 * 0.1)) * sum;
  CHECK(lhs > rhs);
  CHECK_FALSE(check_key_inequality(p, f, y, 0.1, 1.0, 1e-12, 1.0 / 2).pass);
  CHECK(check_key_inequality(p, f, y, 0.1, 1.0).pass);
}
