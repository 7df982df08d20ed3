#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "rgnep/operators.hpp"
#include "rgnep/robustify.hpp"

namespace rgnep {

enum class RelaxationRule {
  conservative,  ///< rho_k = 2(1 - sigma_bar)^2 / ((1 + ell_phi)(2 s_k^2 - s_k + 1))
  aggressive,    ///< rho_k = 2(1 - sigma_bar^2) / ((1 + ell_phi)(2 s_k^2 - s_k + 1))
};

struct Schedule {
  double sigma = 0.0;
  double rho = 1.0;
};

/// Inertia and relaxation at (0-based) iteration k:
/// sigma_k = sigma_bar * (1 - 1/(k+1)), rho_k per the selected rule.
/// Throws std::domain_error unless rho_k lies in (0, 1].
Schedule schedule_params(int k, double sigma_bar, double ell_phi,
                         RelaxationRule rule);

/// S1 — extrapolate along the last displacement:
///   Z = current + sigma (current - previous), blockwise on every variable.
StackedPoint step_inertial(const StackedPoint& current,
                           const StackedPoint& previous, double sigma);

/// S2 — forward-backward core:  Y = resolvent_B(Z - Phi^-1 A(Z)).
/// Pass A(Z) when it is already available, otherwise it is evaluated here.
StackedPoint step_forward_backward(const ExtendedGame& eg,
                                   const Preconditioner& phi,
                                   const StackedPoint& Z,
                                   const StackedPoint* AZ = nullptr,
                                   MessageLog* log = nullptr);

/// S3 — corrected relaxation:
///   W+ = (1 - rho) Z + rho (Y - Phi^-1 (A(Y) - A(Z))).
/// With rho = 1 this is exactly the Tseng forward-backward-forward update.
StackedPoint step_relax(const ExtendedGame& eg, const Preconditioner& phi,
                        const StackedPoint& Z, const StackedPoint& Y,
                        double rho, const StackedPoint* AZ = nullptr,
                        MessageLog* log = nullptr);

struct PreconditionerSpec {
  enum class Kind { uniform, evenly_spaced, custom };
  Kind kind = Kind::uniform;
  double fraction = 0.5;           ///< uniform step fraction of 1/ell_A
  std::vector<double> fractions;   ///< custom per-agent fractions
};

Preconditioner make_preconditioner(const ExtendedGame& eg,
                                   const PreconditionerSpec& spec);

struct SolverParams {
  double sigma_bar = 0.5;
  RelaxationRule relaxation = RelaxationRule::conservative;
  double tolerance = 1e-6;
  int max_iterations = 50000;
  bool tseng = false;           ///< run the plain forward-backward-forward path
  bool keep_history = false;    ///< retain per-iteration strategies
  bool record_timing = false;   ///< fill wall_ms (off: zeros, bit-reproducible)
  bool phi_norm_residual = false;
  PreconditionerSpec precond;

  /// Test hooks: pin the schedule to constants (bypasses schedule_params).
  std::optional<double> forced_sigma;
  std::optional<double> forced_rho;

  /// Optional warm start; zeros (with w projected onto the local sets and
  /// lambda clamped nonnegative) otherwise.
  std::optional<StackedPoint> initial;
};

struct RunReport {
  bool converged = false;
  int iterations = 0;             ///< updates performed
  std::vector<double> residuals;  ///< natural residual after update k (k>=1)
  std::vector<double> lyapunov;   ///< energy gap to the final iterate, k>=1
  std::vector<double> wall_ms;    ///< cumulative wall time after update k
  StackedPoint final_point;
  Eigen::VectorXd x;              ///< stacked strategies at the final point
  MessageLog log;
  double ell_A = 0.0;
  double ell_phi = 0.0;
  std::vector<Eigen::VectorXd> x_history;  ///< per-iteration strategies
};

/// Relaxed-inertial preconditioned forward-backward-forward iteration on the
/// stacked space, built from three primitive steps:
///   S1 (extrapolate):  Z = W + sigma (W - W_prev)
///   S2 (fbf core):     Y = resolvent_B(Z - Phi^-1 A Z)
///                      T = Y - Phi^-1 (A Y - A Z)
///   S3 (relax):        W+ = (1 - rho) Z + rho T
/// With params.tseng the dedicated plain path (sigma = 0, rho = 1, no
/// extrapolation state) runs instead.  Stops when the natural residual of the
/// freshly updated point drops below params.tolerance.
///
/// Every quantity an agent reads during an iteration belongs to itself or a
/// graph neighbor; the report's MessageLog records the observed reads.
RunReport run_distributed(const ExtendedGame& eg, const SolverParams& params);

/// Lyapunov-style energy of iterate k against an anchor point (the final
/// iterate stands in for the unknown solution):
///   H_k = |W_k - anchor|_Phi^2 - sigma_k |W_{k-1} - anchor|_Phi^2
///         + (2 sigma_k^2 - sigma_k + 1) |W_k - W_{k-1}|_Phi^2.
double lyapunov_value(const Preconditioner& phi, const StackedPoint& current,
                      const StackedPoint& previous, const StackedPoint& anchor,
                      double sigma);

struct CentralizedParams {
  double tolerance = 1e-10;
  int max_iterations = 2000000;
  double step_fraction = 0.9;  ///< of 1 / (ell_F + ||coupling rows||)
};

struct CentralizedReport {
  bool converged = false;
  int iterations = 0;
  std::vector<Eigen::VectorXd> xy;  ///< per agent (x_i, y_i..)
  Eigen::VectorXd x;                ///< stacked strategies
  Eigen::VectorXd z;                ///< shared dual block
  Eigen::VectorXd lambda;           ///< one multiplier per coupled inequality
  double residual = 0.0;
};

/// Single-coordinator reference: plain forward-backward-forward on the
/// dualized (pre-lowering) form with one shared multiplier, no copies and no
/// consensus blocks.  Used to cross-check the distributed solution.
CentralizedReport run_centralized(const DualizedGame& g,
                                  const CentralizedParams& params = {});

}  // namespace rgnep
