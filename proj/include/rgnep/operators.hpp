#pragma once

#include <Eigen/Dense>

#include <set>
#include <tuple>
#include <vector>

#include "rgnep/robustify.hpp"

namespace rgnep {

/// One point of the stacked primal-dual space, ordered (w, nu, lambda, chi,
/// mu): strategies-plus-duals, inequality auxiliaries, inequality multipliers,
/// equality auxiliaries, equality multipliers.  nu/lambda hold c_in entries
/// per agent, chi/mu hold c_eq entries per agent.
struct StackedPoint {
  Eigen::VectorXd w;
  Eigen::VectorXd nu;
  Eigen::VectorXd lambda;
  Eigen::VectorXd chi;
  Eigen::VectorXd mu;

  static StackedPoint zero(const ExtendedGame& eg);

  int size() const {
    return static_cast<int>(w.size() + nu.size() + lambda.size() +
                            chi.size() + mu.size());
  }

  Eigen::VectorXd flatten() const;
  static StackedPoint unflatten(const ExtendedGame& eg,
                                const Eigen::VectorXd& v);

  double squared_norm() const;
  double norm() const;

  StackedPoint& operator+=(const StackedPoint& o);
  StackedPoint& operator-=(const StackedPoint& o);
  StackedPoint& operator*=(double a);
  friend StackedPoint operator+(StackedPoint a, const StackedPoint& b) {
    return a += b;
  }
  friend StackedPoint operator-(StackedPoint a, const StackedPoint& b) {
    return a -= b;
  }
  friend StackedPoint operator*(double a, StackedPoint p) { return p *= a; }
};

/// Audit trail of cross-agent reads: (reader, owner, field) triples, where
/// field is one of 'x' (strategy block via the cost), 'n' (nu), 'l' (lambda),
/// 'c' (chi), 'm' (mu), 'z'.  Deduplicated across rounds; `rounds` counts the
/// recorded operator evaluations.
struct MessageLog {
  std::set<std::tuple<int, int, char>> reads;
  long rounds = 0;

  void record(int reader, int owner, char field) {
    if (reader != owner) reads.insert({reader, owner, field});
  }
};

/// The full game operator A = A1 + A2.  Per agent i (with the block
/// Laplacians Lbar = L (x) I_c_in and Lhat = L (x) I_c_eq):
///
///   A w_i      = grad_i J(x) + S_i' lambda_i + R_i' mu_i
///   A nu_i     = [Lbar lambda]_i
///   A lambda_i = -S_i w_i + s_i - [Lbar nu]_i + [Lbar lambda]_i
///   A chi_i    = [Lhat mu]_i
///   A mu_i     = -R_i w_i - [Lhat chi]_i + [Lhat mu]_i
///
/// The diagonal Laplacian terms in the lambda and mu rows damp multiplier
/// disagreement; together with the pseudo-gradient they form the monotone
/// part A1 = (F~(w), 0, s + Lbar lambda, 0, Lhat mu).  The remainder A2 is
/// skew-symmetric exactly as assembled, which is what the splitting needs.
StackedPoint eval_A(const ExtendedGame& eg, const StackedPoint& p,
                    MessageLog* log = nullptr);
StackedPoint eval_A1(const ExtendedGame& eg, const StackedPoint& p);
StackedPoint eval_A2(const ExtendedGame& eg, const StackedPoint& p);

/// resolvent of B: projects w_i onto W_i, clamps lambda at zero, and leaves
/// nu, chi, mu untouched.  Firmly nonexpansive (product of projections).
StackedPoint resolvent_B(const ExtendedGame& eg, const StackedPoint& p,
                         double projection_tol = 1e-10);

/// Upper bound on the Lipschitz constant of A:
///   ell_A = ell_F + 4 kappa + max_i ||S_i|| + max_i ||R_i||,
/// splitting as (ell_F + 2 kappa) for A1 and (2 kappa + ||S|| + ||R||) for
/// the skew part.
double lipschitz_bound(const ExtendedGame& eg);

/// Diagonal preconditioner Phi = diag(1/alpha_i, 1/beta_i, 1/gamma_i,
/// 1/tau_i, 1/theta_i) stored through its step vectors (the diagonal of
/// Phi^-1).  Valid when every step lies in (0, 1/ell_A), which makes
/// ell_Phi = ell_A / lambda_min(Phi) = ell_A * max_step < 1.
struct Preconditioner {
  std::vector<Eigen::VectorXd> alpha;  ///< per agent, length eta_i
  std::vector<Eigen::VectorXd> beta;   ///< per agent, length c_in
  std::vector<Eigen::VectorXd> gamma;  ///< per agent, length c_in
  std::vector<Eigen::VectorXd> tau;    ///< per agent, length c_eq
  std::vector<Eigen::VectorXd> theta;  ///< per agent, length c_eq

  double lambda_min = 0.0;  ///< smallest eigenvalue of Phi = 1 / max step
  double ell_phi = 0.0;     ///< ell_A / lambda_min

  /// Phi^-1 p (componentwise multiply by the steps).
  StackedPoint apply_inverse(const StackedPoint& p) const;
  /// Phi p (componentwise divide by the steps).
  StackedPoint apply(const StackedPoint& p) const;
  /// <p, Phi p>, the squared Phi-norm.
  double weighted_squared_norm(const StackedPoint& p) const;
};

/// Uniform steps fraction / ell_A in every block of every agent.
/// Requires fraction in (0, 1).
Preconditioner build_preconditioner(const ExtendedGame& eg, double ell_A,
                                    double fraction = 0.5);

/// Per-agent uniform steps fractions[i] / ell_A; each fraction must lie in
/// (0, 1) so the contraction hypothesis stays verified.
Preconditioner build_preconditioner(const ExtendedGame& eg, double ell_A,
                                    const std::vector<double>& fractions);

/// || p - resolvent_B(p - Phi^-1 A p) ||; zero exactly at solutions of the
/// inclusion 0 in A + B.  Euclidean by default, Phi-weighted on request.
double natural_residual(const ExtendedGame& eg, const Preconditioner& phi,
                        const StackedPoint& p, bool phi_weighted = false);

}  // namespace rgnep
