#pragma once

#include "fracheat/cylinder.h"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fracheat {

  struct GridField;

  enum class GrowthKind {
    Bounded,
    Polynomial,        // |u| <~ |x|^degree in space
    Affine,            // exactly affine in x, constant in t
    TimePolynomial,    // |u| <~ |t|^degree into the past
    ExponentialInTime, // u ~ e^{rate t}
    SpatialGaussian,   // u ~ e^{rate |x|^2}
    Custom             // decided by sampling
  };

  struct Growth {
    GrowthKind kind = GrowthKind::Bounded;
    double rate = 0.0;   // degree or exponential rate, per kind
    static Growth bounded() { return {}; }
    static Growth polynomial(double m) { return {GrowthKind::Polynomial, m}; }
    static Growth affine() { return {GrowthKind::Affine, 1.0}; }
    static Growth time_polynomial(double m) { return {GrowthKind::TimePolynomial, m}; }
    static Growth exponential_in_time(double l) { return {GrowthKind::ExponentialInTime, l}; }
    static Growth spatial_gaussian(double c) { return {GrowthKind::SpatialGaussian, c}; }
    static Growth custom() { return {GrowthKind::Custom, 0.0}; }
  };

  std::string to_string(const Growth& g);

  // u(., tau) is close to a multiple of exp(-|y - center|^2/(4 lag))
  struct Localization {
    std::vector<double> center;
    double lag = 1.0;
  };

  using Evaluator = std::function<double(std::span<const double>, double)>;
  // E[u(x - 2 sqrt(a) Z, tau)], Z standard normal with density pi^{-n/2} e^{-|z|^2}
  using HeatFlow = std::function<double(std::span<const double>, double tau, double a)>;
  using Localizer = std::function<std::optional<Localization>(double tau)>;

  struct FieldHandle {
    int n = 1;
    Evaluator eval;
    Growth growth;
    std::optional<ParabolicCylinder> support;   // zero outside
    std::optional<double> time_floor;           // zero for t <= floor
    HeatFlow heat_flow;                         // optional exact spatial means
    Localizer localize;                         // optional, for importance-weighted means
    bool concurrent_safe = true;
    std::shared_ptr<const GridField> grid_source;   // set for grid-backed fields
    std::string name;

    double operator()(std::span<const double> x, double t) const { return eval(x, t); }
    bool zero_at_time(double t) const
    {
      if (time_floor && t <= *time_floor)
        return true;
      return support && !support->contains_t(t);
    }
  };

  FieldHandle make_field(int n, Evaluator f, Growth g = Growth::bounded(), std::string name = {});
  FieldHandle lift_time_independent(int n, std::function<double(std::span<const double>)> g,
                                    Growth growth = Growth::bounded(), std::string name = {});
  FieldHandle lift_space_independent(int n, std::function<double(double)> h,
                                     Growth growth = Growth::bounded(), std::string name = {});

  // sum_i c_i u_i; heat flow kept when every term has one
  FieldHandle linear_combination(const std::vector<std::pair<double, FieldHandle>>& terms);
  // (x,t) -> u(x - shift_x, t - shift_t)
  FieldHandle translated(const FieldHandle& u, std::span<const double> shift_x, double shift_t);

}
