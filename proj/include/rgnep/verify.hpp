#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "rgnep/operators.hpp"
#include "rgnep/robustify.hpp"

namespace rgnep {

struct ConstraintCheck {
  int constraint = 0;
  double lhs_max = 0.0;
  double rhs_min = 0.0;
  double slack = 0.0;  ///< rhs_min - lhs_max, negative means violated
  bool ok = false;
  std::vector<Eigen::VectorXd> lhs_argmax;  ///< offending local vertices
  Eigen::VectorXd rhs_argmin;               ///< offending global vertex
};

struct FeasibilityReport {
  bool feasible = false;
  bool local_ok = false;
  double min_slack = 0.0;
  std::vector<double> local_violation;  ///< per agent, vs Omega_i
  std::vector<ConstraintCheck> constraints;
  std::string summary() const;
};

/// Exact robust feasibility of the stacked strategy x: every coupled
/// inequality is evaluated at its worst uncertainty vertices (independent of
/// any dual machinery) and must hold with slack >= -tol; local sets must be
/// satisfied within 1e-8.
FeasibilityReport check_robust_feasibility(const UncertainGame& game,
                                           const Eigen::VectorXd& x,
                                           double tol = 1e-6);

struct BestResponseParams {
  double tolerance = 1e-8;  ///< projected-gradient stationarity target
  int max_iterations = 2000000;
};

/// J_i(x) minus the best robustly-feasible deviation value for agent i with
/// the others fixed at x.  The deviation problem is solved by dualizing the
/// single-agent robust constraint (opponents' worst-case contributions become
/// constants) and running projected gradient descent on (x_i, y_i).
/// Nonnegative up to solver error; ~0 at a generalized equilibrium.
double best_response_gap(const UncertainGame& game, const Eigen::VectorXd& x,
                         int agent, const BestResponseParams& params = {});

struct KktResidual {
  double stationarity = 0.0;     ///< projected-gradient displacement on w
  double complementarity = 0.0;  ///< |lambda_avg' (sum S_i w_i - b0)|
  double primal = 0.0;           ///< coupling + local set violation
  double lambda_consensus = 0.0;
  double mu_consensus = 0.0;
  double z_consensus = 0.0;
  double dual_sign = 0.0;  ///< max(0, -min lambda)

  double aggregate() const;
};

/// First-order optimality measures of a stacked primal-dual point for the
/// lowered game.  Stationarity uses the Phi-scaled projected step when a
/// preconditioner is supplied and a unit step otherwise.
KktResidual kkt_residual(const ExtendedGame& eg, const StackedPoint& p,
                         const Preconditioner* phi = nullptr);

struct ConsensusGaps {
  double z = 0.0;       ///< max pairwise distance between z copies
  double lambda = 0.0;  ///< max pairwise distance between lambda blocks
  double mu = 0.0;      ///< max pairwise distance between mu blocks
};

ConsensusGaps consensus_gaps(const ExtendedGame& eg, const StackedPoint& p);

}  // namespace rgnep
