#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace rgnep {

/// Closed convex polyhedron { x : A x <= b, Aeq x = beq }.
///
/// The inequality part may be empty (pure affine set) and the equality part
/// may be empty (pure inequality polytope).  Row counts of A/b and Aeq/beq
/// must match; all matrices share the ambient dimension.
struct Polytope {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;

  Polytope() = default;
  Polytope(Eigen::MatrixXd A_, Eigen::VectorXd b_);
  Polytope(Eigen::MatrixXd A_, Eigen::VectorXd b_, Eigen::MatrixXd Aeq_,
           Eigen::VectorXd beq_);

  /// Ambient dimension (columns of whichever constraint block is present).
  int dim() const;

  int inequality_rows() const { return static_cast<int>(A.rows()); }
  int equality_rows() const { return static_cast<int>(Aeq.rows()); }

  /// Largest constraint violation at x (<= 0 means feasible).
  double violation(const Eigen::VectorXd& x) const;

  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const {
    return violation(x) <= tol;
  }

  /// Axis-aligned box; infinite entries in lo/hi produce no row.
  static Polytope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

  /// { x : x >= 0 } in dimension d.
  static Polytope nonnegative_orthant(int d);

  /// Concatenate two polytopes on independent variable blocks.
  static Polytope product(const Polytope& p, const Polytope& q);
};

/// J_i(x) = 1/2 x_i' Q x_i + x_i' (sum_j cross[j] x_j) + linear' x_i.
///
/// `cross` maps other agents' indices to coupling blocks; an entry for the
/// agent itself is not allowed (own-quadratic terms belong in Q).
struct QuadraticCost {
  Eigen::MatrixXd Q;
  std::map<int, Eigen::MatrixXd> cross;
  Eigen::VectorXd linear;
};

/// Black-box cost: gradient with respect to the agent's own block at the
/// stacked point x, plus an optional value oracle (required only by
/// best-response verification).
struct OracleCost {
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x)> gradient;
  std::function<double(const Eigen::VectorXd& x)> value;
};

using AgentCost = std::variant<QuadraticCost, OracleCost>;

struct Agent {
  int dim = 0;
  AgentCost cost;
  Polytope local_set;  ///< Omega_i
};

/// Polyhedral uncertainty: one bounded polytope Delta_i per agent plus one
/// shared polytope Delta, each with the origin strictly in its interior.
struct UncertaintySets {
  std::vector<Polytope> local;
  Polytope global;
};

/// One robust coupled inequality
///   sum_i (a0_i + P_i delta_i)' x_i <= b0 + q' delta
/// required for every delta_i in Delta_i and delta in Delta.
struct UncertainConstraint {
  std::vector<Eigen::VectorXd> a0;  ///< per agent, length n_i
  std::vector<Eigen::MatrixXd> P;   ///< per agent, n_i x p_i
  double b0 = 0.0;
  Eigen::VectorXd q;                ///< length p
};

struct UncertainGame {
  std::vector<Agent> agents;
  std::vector<UncertainConstraint> coupling;
  UncertaintySets uncertainty;

  int num_agents() const { return static_cast<int>(agents.size()); }
  int total_dim() const;
  /// Start of agent i's block in the stacked strategy vector.
  int offset(int i) const;
};

/// Stacked partial gradients col_i(grad_{x_i} J_i(x_i, x_{-i})).
Eigen::VectorXd pseudo_gradient(const UncertainGame& game,
                                const Eigen::VectorXd& x);

/// J_i evaluated at the stacked point x.  Throws for oracle costs without a
/// value function.
double cost_eval(const UncertainGame& game, int i, const Eigen::VectorXd& x);

/// For all-quadratic games: the n x n matrix G with F(x) = G x + const,
/// assembled from own blocks Q_i and coupling blocks.
Eigen::MatrixXd game_jacobian(const UncertainGame& game);

/// Lipschitz constant of the pseudo-gradient.  Quadratic games: spectral norm
/// of game_jacobian.  Oracle games: must be user supplied, so this throws.
double lipschitz_F(const UncertainGame& game);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool ok() const;
  std::string summary() const;
};

/// Checks the game's standing structural assumptions: convexity of each
/// quadratic cost (Q_i symmetric PSD), boundedness of every uncertainty
/// polytope with strictly interior origin, monotonicity of the pseudo-gradient
/// (quadratic case: symmetric part of the game Jacobian PSD up to tolerance),
/// and nonemptiness of the robustly-feasible set X via a feasibility LP on the
/// dualized constraint system.
ValidationReport validate_game(const UncertainGame& game, double tol = 1e-9);

}  // namespace rgnep
