#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace fracheat {

  // Ball in space times a time interval. The parabolic Q_r(x0,t0) is the case
  // t_lo = t0 - r^2, t_hi = t0 + r^2; boxes such as B_2 x (0,3) are allowed too.
  struct ParabolicCylinder {
    std::vector<double> center_x;
    double radius = 1.0;
    double t_lo = -1.0;
    double t_hi = 1.0;

    static ParabolicCylinder parabolic(std::vector<double> center_x, double center_t, double r)
    {
      return {std::move(center_x), r, center_t - r * r, center_t + r * r};
    }
    static ParabolicCylinder box(std::vector<double> center_x, double r, double t_lo, double t_hi)
    {
      return {std::move(center_x), r, t_lo, t_hi};
    }

    int n() const { return static_cast<int>(center_x.size()); }
    double center_t() const { return 0.5 * (t_lo + t_hi); }

    double dist2(std::span<const double> x) const
    {
      double d = 0.0;
      for (std::size_t i = 0; i < center_x.size(); ++i)
        d += (x[i] - center_x[i]) * (x[i] - center_x[i]);
      return d;
    }
    bool contains_x(std::span<const double> x) const { return dist2(x) < radius * radius; }
    bool contains_t(double t) const { return t > t_lo && t < t_hi; }
    bool contains(std::span<const double> x, double t) const { return contains_t(t) && contains_x(x); }
    bool valid() const { return radius > 0.0 && t_hi > t_lo && !center_x.empty(); }
  };

}
