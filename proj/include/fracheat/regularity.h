#pragma once

#include "fracheat/cylinder.h"
#include "fracheat/grid_field.h"

#include <optional>
#include <string>
#include <vector>

namespace fracheat {

  enum class HolderMode { Holder, LogLipschitz, OnePlusLog, Schauder };

  std::string to_string(HolderMode m);
  HolderMode holder_mode_from_string(const std::string& s);

  struct HolderSpec {
    double alpha = 0.5;            // C^{2 alpha, alpha}; in Schauder mode the source exponent
    HolderMode mode = HolderMode::Holder;
    long pair_budget = 200000;
    double min_sep = 0.0;          // pairs closer than this are skipped (0: grid resolution)
    double s = 0.5;                // Schauder mode: C^{2s+alpha, s+alpha/2}
    double time_alpha = 0.5;       // log-Lipschitz mode: Hoelder exponent in t
    long long seed = 0;
    int min_bins = 8;

    void validate() const;
  };

  // which derivative of u a component looks at
  enum class Derivative { None, Dx, Dt, Dxx };

  struct Witness {
    std::string component;
    std::size_t node1 = 0, node2 = 0;   // flat grid indices
    std::vector<double> x1, x2;
    double t1 = 0.0, t2 = 0.0;
    double increment = 0.0;
    double distance = 0.0;
    double ratio = 0.0;
  };

  struct BinStat {
    double distance = 0.0;    // distance of the bin's largest increment
    double increment = 0.0;
    long pairs = 0;
  };

  enum class PairKind { Joint, Space, Time };
  enum class Modulus { Power, LogLipschitz };

  struct HolderComponent {
    std::string name;
    Derivative derivative = Derivative::None;
    int axis = 0, axis2 = 0;      // derivative directions (Dx: axis; Dxx: axis, axis2)
    PairKind pairs = PairKind::Joint;
    Modulus modulus = Modulus::Power;
    double exponent = 1.0;        // of the power modulus
    bool sqrt_time = false;       // time-only pairs measured by |t - tau|^{1/2}

    double seminorm = 0.0;
    double effective_exponent = 0.0;   // NaN when no increments
    long pair_count = 0;
    bool sampled = false;
    std::vector<BinStat> bins;
    std::optional<Witness> witness;
  };

  struct HolderReport {
    std::string case_name;
    double sup_norm = 0.0;
    double derivative_sup = 0.0;   // sup |grad u| (+ |D^2 u| + |d_t u| in the C^{2+} case)
    double seminorm = 0.0;         // sum over components
    double norm = 0.0;             // sup_norm + derivative_sup + seminorm
    double effective_exponent = 0.0;
    double theorem_ratio = 0.0;    // NaN unless produced by a theorem check
    double right_side = 0.0;
    std::vector<HolderComponent> components;
    std::vector<Witness> witnesses;
    std::string diagnostic;
  };

  HolderReport estimate_parabolic_holder(const GridField& u, const ParabolicCylinder& Q, const HolderSpec& spec);
  HolderReport estimate_log_lipschitz(const GridField& u, const ParabolicCylinder& Q, const HolderSpec& spec);

  enum class TheoremKind { Holder, Schauder };

  // left norm of u on Qt over (right norm of f on Q + sup |u| on Q). When u_full is given it
  // supplies sup |u| on Q, so u may be sampled finely on Qt only.
  HolderReport check_estimate_theorem(const GridField& u, const GridField& f, double s, std::optional<double> alpha,
                                      TheoremKind which, const ParabolicCylinder& Qt, const ParabolicCylinder& Q,
                                      const HolderSpec& base = {}, const GridField* u_full = nullptr);

  // C^2-level norm of v on Qt (sup of v, grad, Hessian, d_t by finite differences) over sup |v| on Q
  HolderReport homogeneous_estimate(const GridField& v, const ParabolicCylinder& Qt, const ParabolicCylinder& Q,
                                    const GridField* v_full = nullptr);

  // derivative grids: 4th-order central differences, lower order near the edges
  GridField grid_derivative(const GridField& u, Derivative d, int axis = 0, int axis2 = 0);

  // recompute a witness ratio from the grid, for checking reports
  double reevaluate_witness(const GridField& u, const HolderComponent& c);

  // closed membership with a relative slack, so grids whose end nodes sit on the boundary count
  bool node_in_cylinder(const ParabolicCylinder& Q, std::span<const double> x, double t);

  std::string report_json(const HolderReport& r);

}
