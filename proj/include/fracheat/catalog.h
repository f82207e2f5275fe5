#pragma once

#include "fracheat/field.h"
#include "fracheat/frac_params.h"
#include "fracheat/quadrature.h"

#include "json.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fracheat {

  struct CatalogContext {
    FracParams frac;
    QuadratureSpec quad;
    std::string base_dir;   // relative grid paths resolve against this
  };

  // A built field plus, when known in closed form, its image under the master operator.
  struct CatalogField {
    std::string name;
    std::string type;
    FieldHandle field;
    std::function<double(std::span<const double>, double)> exact_master;   // may be empty
  };

  // Field types: constant, affine, cos, exp_cos, power, time_power, exp_time, gaussian_bump,
  // fundamental, smooth_random, manufactured, grid. Unknown keys are rejected with the key path.
  CatalogField build_field(const nlohmann::json& spec, const CatalogContext& ctx, const std::string& path = "field");

  std::vector<std::string> catalog_types();

  // {center, radius, t_lo, t_hi} (time box) or {center, center_t, radius} (Q_r)
  ParabolicCylinder parse_cylinder(const nlohmann::json& j, int n, const std::string& path);

  // 1.5 + sum of `terms` modes a cos(k.y + omega t + phi), |k_i| <= 1.2, |omega| <= 1.5, |a| <= 0.3
  FieldHandle smooth_random_source(int n, unsigned long long seed, int terms = 3, double base = 1.5,
                                   double amplitude = 0.3, double kmax = 1.2, double omega_max = 1.5);

  // G(x - x0, t - t0) with the fundamental-solution constant, exact heat flow and localization
  FieldHandle fundamental_snapshot(const FracParams& p, std::span<const double> x0, double t0);

}
