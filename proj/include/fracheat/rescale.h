#pragma once

#include "fracheat/field.h"
#include "fracheat/grid_field.h"
#include "fracheat/greens.h"

#include <functional>
#include <optional>
#include <span>
#include <string>

namespace fracheat {

  struct BlowupProblem {
    int n = 1;
    double p = 2.0;
    double q = 0.0;   // gradient exponent, 0 disables the gradient term
    double s = 0.5;
    std::function<double(std::span<const double>)> b;   // gradient coefficient, optional
    std::function<double(std::span<const double>)> K;   // limit profile, optional
    double C0 = 1.0;
    double Kbar = 1.0;

    void validate() const;              // basic ranges
    void validate_height_regime() const;    // 1 < p < (n+2)/(n+2-2s)
    void validate_gradient_regime() const;  // s > 1/2, 0 < q < 2sp/(2s+p-1)
  };

  enum class BlowupVariant { Height, HeightPlusGradient };
  std::string to_string(BlowupVariant v);

  struct RescaleResult {
    BlowupVariant variant = BlowupVariant::Height;
    SpaceTimePoint X_k;
    double value_at_X = 0.0;   // u(X_k) or M_k(X_k)
    double R_k = 0.0;
    SpaceTimePoint A_k;
    std::size_t A_node = 0;
    bool refined = false;      // quadratic refinement moved A_k off the node
    double S_max = 0.0;
    double value_at_A = 0.0;   // u(A_k) or M_k(A_k)
    double lambda_k = 0.0;
    double m_k = 0.0;
    // 2 R lambda_k <= R_k - |A_k - X_k|
    double radius_lhs = 0.0, radius_rhs = 0.0, radius_defect = 0.0;
    bool radius_ok = true;
    // R_k - |A_k - X_k| <= 2 (R_k - |X - X_k|) and the doubling bound, over nodes in B_{R lambda_k}(A_k)
    double chain_defect = 0.0;
    double doubling_defect = 0.0;
    bool chain_ok = true;
    long chain_nodes = 0;

    // filled by rescale_field
    bool rescaled = false;
    double R_bar = 0.0;
    GridField v_k;
    GridField combined;        // gradient variant: v^{(p-1)/2s} + |grad v|^{(p-1)/(2s+p-1)}
    double bound = 0.0;        // 2^{2s/(p-1)} or 2
    double origin_value = 0.0; // v_k(0,0), or the combined quantity there
    double max_value = 0.0;
    bool ceiling_ok = true;
  };

  RescaleResult select_blowup_point(const GridField& u, const SpaceTimePoint& X_k, double R, const BlowupProblem& prob,
                                    BlowupVariant variant);

  // v_k on Q_{R/sqrt(n+1)}(0,0); steps per axis are forced odd so (0,0) is a node
  void rescale_field(const GridField& u, RescaleResult& res, double R, const BlowupProblem& prob, int steps_x = 65,
                     int steps_t = 33);

  struct ExponentTable {
    double two_s_over_pm1 = 0.0;        // 2s/(p-1)
    double pm1_over_two_s = 0.0;        // (p-1)/(2s)
    double two_sp_over_pm1 = 0.0;       // 2sp/(p-1)
    double gradient_term = 0.0;         // (2sp - (2s+p-1)q)/(p-1)
    double gradient_bound = 0.0;        // 2s/(2s+p-1)
    double q_critical = 0.0;            // 2sp/(2s+p-1)
    bool gradient_term_vanishes = false;   // exponent > 0
    bool critical = false;                 // q at q_critical
    double p_upper = 0.0;               // (n+2)/(n+2-2s)
    bool p_admissible = false;
  };

  ExponentTable scaling_exponent_table(const BlowupProblem& prob);

  // (x,t) -> u(lambda x + A.x, lambda^2 t + A.t) / m, with heat flow carried through the scaling
  FieldHandle rescaled_field(const FieldHandle& u, const SpaceTimePoint& A, double lambda, double m);

  // Self-similar test family of height H at X: H phi((X - X0)/l), l = H^{-(p-1)/(2s)}, phi radially
  // decreasing, optionally with an off-centre spike inside B_{R_k/2}. The grid covers B_{R_k}(X).
  GridField synthetic_blowup_grid(const BlowupProblem& prob, double height, double R, const SpaceTimePoint& X,
                                  bool spike, int steps = 201);

  std::string rescale_json(const RescaleResult& r, const ExponentTable& e);

}
