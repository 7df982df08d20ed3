#pragma once

#include <Eigen/Dense>

#include <vector>

#include "rgnep/graph.hpp"
#include "rgnep/model.hpp"

namespace rgnep {

/// Strong-duality certificate data for one robust constraint: the worst case
/// over each bounded uncertainty polytope is replaced by a minimization over
/// dual multipliers, turning "for all delta" into existential constraints.
///
/// Per agent i:   y_i >= 0,  D_i' y_i = P_i' x_i,  contribution d_i' y_i.
/// Shared:        z >= 0,    D' z = -q,            contribution d' z.
/// Deterministic form:  sum_i (a0_i' x_i + d_i' y_i) + d' z <= b0.
struct DualBlocks {
  std::vector<Eigen::MatrixXd> agent_eq_x;   ///< p_i x n_i  ( =  P_i')
  std::vector<Eigen::MatrixXd> agent_eq_y;   ///< p_i x m_i  ( = -D_i')
  std::vector<Eigen::VectorXd> agent_cost;   ///< d_i, length m_i
  Eigen::MatrixXd shared_eq;                 ///< p x l  ( = D')
  Eigen::VectorXd shared_rhs;                ///< -q
  Eigen::VectorXd shared_cost;               ///< d, length l

  int agent_dual_dim(int i) const {
    return static_cast<int>(agent_cost[i].size());
  }
  int shared_dual_dim() const { return static_cast<int>(shared_cost.size()); }
};

DualBlocks dualize_constraint(const UncertainConstraint& c,
                              const UncertaintySets& u);

/// The deterministic extended game before per-agent lowering: each agent
/// keeps (x_i, y_i..) with a private polyhedral set, one shared z block per
/// constraint, and scalar coupled inequalities linking everybody.
struct DualizedGame {
  UncertainGame base;
  std::vector<DualBlocks> duals;  ///< one entry per coupling constraint

  // Derived layout -----------------------------------------------------
  std::vector<int> xy_dim;             ///< n_i + sum_k m_ik
  std::vector<Polytope> xy_set;        ///< feasible set of (x_i, y_i..)
  std::vector<Eigen::MatrixXd> s_xy;   ///< c x xy_dim[i]: per-constraint rows
  Polytope z_set;                      ///< stacked shared duals, all constraints
  Eigen::MatrixXd s_z;                 ///< c x zeta: d' on each block
  Eigen::VectorXd rhs;                 ///< b0 per constraint
  int zeta = 0;                        ///< total shared dual dimension

  int num_constraints() const { return static_cast<int>(duals.size()); }
  int num_agents() const { return base.num_agents(); }
  /// Offset of constraint k's y block inside agent i's (x,y) vector.
  int y_offset(int i, int k) const;

  /// LHS of the coupled inequalities at stacked ((x,y) per agent, z).
  Eigen::VectorXd coupling_value(const std::vector<Eigen::VectorXd>& xy,
                                 const Eigen::VectorXd& z) const;
};

/// Dualize every coupling constraint of the game.  Validated inputs only:
/// uncertainty polytopes must be bounded with the origin strictly interior
/// (this is what makes the dual feasible and the reformulation exact).
DualizedGame build_extended_game(const UncertainGame& game);

/// Per-agent data of the lowered game: w_i = col(x_i, y_i, z_i) where z_i is
/// the agent's private copy of the shared dual block.
struct AgentCanonical {
  int n = 0;     ///< strategy block
  int m = 0;     ///< local dual block (all constraints)
  int zeta = 0;  ///< shared dual copy
  Polytope W;    ///< { H w <= h, G w = g }
  Eigen::MatrixXd S;  ///< c_in x eta: agent share of the coupled inequalities
  Eigen::MatrixXd R;  ///< c_eq x eta: agent column of the consensus operator

  int eta() const { return n + m + zeta; }
};

/// Fully lowered form: every agent carries w_i in W_i, the coupled
/// inequalities read sum_i S_i w_i <= sum_i s_i with equal shares
/// s_i = b0 / N, and agreement of the z copies is encoded by the graph:
/// sum_i R_i w_i = (L (x) I_zeta) col_i(z_i), which vanishes iff all copies
/// coincide on a connected graph.
struct ExtendedGame {
  UncertainGame base;
  CommGraph graph;
  std::vector<AgentCanonical> agents;
  Eigen::VectorXd s_share;  ///< c_in entries: b0_k / N
  int c_in = 0;             ///< coupled inequalities
  int c_eq = 0;             ///< N * zeta consensus equalities
  int zeta = 0;

  std::vector<int> w_offset;  ///< start of w_i in the stacked w vector
  int w_dim = 0;

  int num_agents() const { return static_cast<int>(agents.size()); }

  /// col_i(x_i) read out of the stacked w.
  Eigen::VectorXd extract_x(const Eigen::VectorXd& w) const;
  /// Agent i's z copy read out of the stacked w.
  Eigen::VectorXd extract_z(const Eigen::VectorXd& w, int i) const;

  /// Pseudo-gradient lifted to w space: col_i(grad_i J_i(x), 0, 0).
  Eigen::VectorXd pseudo_gradient_w(const Eigen::VectorXd& w) const;

  /// sum_i S_i w_i  (value of the coupled inequality LHS).
  Eigen::VectorXd coupling_value(const Eigen::VectorXd& w) const;

  /// max_i ||S_i||_2 and max_i ||R_i||_2 (operator norms of the block
  /// diagonal stackings), used by the Lipschitz bound.
  double s_norm() const;
  double r_norm() const;
};

ExtendedGame to_canonical(const DualizedGame& g, const CommGraph& graph);

}  // namespace rgnep
