#pragma once
// Reference computations used only by the tests. Nothing here calls into the library.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

  constexpr double pi = 3.14159265358979323846;

  // Lanczos approximation, g = 7, 9 terms; about 15 digits for real arguments
  inline double gamma(double x)
  {
    static const std::array<double, 9> c{0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
                                         771.32342877765313,   -176.61502916214059,   12.507343278686905,
                                         -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    if (x < 0.5)
      return pi / (std::sin(pi * x) * gamma(1.0 - x));
    x -= 1.0;
    double a = c[0];
    const double t = x + 7.5;
    for (int i = 1; i < 9; ++i)
      a += c[i] / (x + i);
    return std::sqrt(2.0 * pi) * std::pow(t, x + 0.5) * std::exp(-t) * a;
  }

  inline double kernel_constant(int n, double s) { return 1.0 / (std::pow(4.0 * pi, 0.5 * n) * std::fabs(gamma(-s))); }

  inline double kernel(int n, double s, const std::vector<double>& dx, double dt)
  {
    if (dt <= 0.0)
      return 0.0;
    double r2 = 0.0;
    for (double v : dx)
      r2 += v * v;
    return kernel_constant(n, s) * std::pow(dt, -(0.5 * n + 1.0 - s)) * std::exp(-r2 / (4.0 * dt));
  }

  // central differences
  inline double d1(const std::function<double(double)>& f, double x, double h)
  {
    return (f(x + h) - f(x - h)) / (2.0 * h);
  }
  inline double d2(const std::function<double(double)>& f, double x, double h)
  {
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
  }

  // composite Simpson on [a,b], m even
  inline double simpson(const std::function<double(double)>& f, double a, double b, int m)
  {
    const double h = (b - a) / m;
    double acc = f(a) + f(b);
    for (int i = 1; i < m; ++i)
      acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return acc * h / 3.0;
  }

  // fraction of the circle |y - x| = r (|x| = d) lying inside the disc of radius R about 0
  inline double arc_fraction_inside(double r, double d, double R)
  {
    if (d == 0.0)
      return r < R ? 1.0 : 0.0;
    if (r <= R - d)
      return 1.0;
    if (r >= R + d)
      return 0.0;
    const double c = (r * r + d * d - R * R) / (2.0 * r * d);
    return std::acos(std::max(-1.0, std::min(1.0, c))) / pi;
  }

  inline std::mt19937_64 rng(unsigned long long seed) { return std::mt19937_64(seed); }

  inline double uniform(std::mt19937_64& g, double a, double b)
  {
    return std::uniform_real_distribution<double>(a, b)(g);
  }

  inline std::vector<double> unit_vector(std::mt19937_64& g, int n)
  {
    std::normal_distribution<double> N;
    std::vector<double> v(n);
    double r = 0.0;
    do {
      r = 0.0;
      for (auto& c : v) {
        c = N(g);
        r += c * c;
      }
    } while (r < 1e-20);
    r = std::sqrt(r);
    for (auto& c : v)
      c /= r;
    return v;
  }

  inline double rel(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

}
