#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

#include "rgnep/model.hpp"

namespace rgnep {

/// Thrown when the iterative projection fails to reach its tolerance within
/// the sweep cap.  Carries the last iterate and the remaining residual so the
/// caller can diagnose (typically: an empty or ill-scaled target set).
class ProjectionError : public std::runtime_error {
 public:
  ProjectionError(std::string what, Eigen::VectorXd last, double residual)
      : std::runtime_error(std::move(what)),
        last_iterate(std::move(last)),
        residual(residual) {}

  Eigen::VectorXd last_iterate;
  double residual;
};

/// Euclidean projection of `point` onto `target`.
///
/// Fast paths: boxes (componentwise clamp), the nonnegative orthant, and pure
/// affine sets (least squares).  Everything else runs Dykstra's alternating
/// projection over the halfspace rows and the affine block.  A sweep ends the
/// iteration only when no individual set moved the point by more than a tenth
/// of `tolerance`, i.e. the candidates of all sets agree; the change between
/// consecutive outer iterates alone is not a safe stop (the scheme can stall
/// on a face for many sweeps while its correction terms grow).  Sweeps are
/// capped at 1e5, after which a ProjectionError is thrown.
Eigen::VectorXd project_polytope(const Polytope& target,
                                 const Eigen::VectorXd& point,
                                 double tolerance = 1e-10);

/// Exact projection for small polytopes: enumerates candidate active sets
/// (subsets of inequality rows joined with all equalities), solves each
/// equality-constrained least-distance system, and keeps the closest fully
/// feasible candidate.  Combinatorial, so it throws std::invalid_argument
/// when the subset count exceeds a desk-scale budget.  Used where an exact
/// answer on a thin feasible wedge matters more than speed.
Eigen::VectorXd project_polytope_small(const Polytope& target,
                                       const Eigen::VectorXd& point);

/// All vertices of a bounded polytope, deduplicated at `dedupe_tol` in the
/// infinity norm.  Brute force over all dim-subsets of the stacked rows, so
/// only desk scale is supported: dim <= 6 and at most 16 rows, otherwise
/// std::invalid_argument.
std::vector<Eigen::VectorXd> enumerate_vertices(const Polytope& target,
                                                double dedupe_tol = 1e-9);

struct WorstCase {
  double lhs_max = 0.0;  ///< max over uncertainty of the constraint LHS at x
  double rhs_min = 0.0;  ///< min over uncertainty of the constraint RHS
  std::vector<Eigen::VectorXd> lhs_argmax;  ///< maximizing vertex per agent
  Eigen::VectorXd rhs_argmin;               ///< minimizing global vertex
  double slack() const { return rhs_min - lhs_max; }
};

/// Worst-case sides of one robust constraint at the stacked point x,
/// evaluated exactly by vertex enumeration of the uncertainty polytopes.
WorstCase worst_case_value(const UncertainConstraint& c,
                           const UncertaintySets& u, const Eigen::VectorXd& x);

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Eigen::VectorXd x;
  double value = 0.0;
};

/// min c'x over the polytope, dense two-phase simplex with Bland's rule.
/// Intended for the moderate dimensions that arise here (tens of variables).
LpResult solve_lp(const Eigen::VectorXd& c, const Polytope& target);

/// Phase-one feasibility test (no objective).
bool is_feasible(const Polytope& target);

/// True when the recession cone { A d <= 0, Aeq d = 0 } is trivial, checked
/// by maximizing each +/- coordinate over the cone capped to the unit box.
bool is_bounded(const Polytope& target);

/// True when some point satisfies every inequality with slack >= margin
/// (equalities still hold exactly).  Used for interiority checks.
bool has_interior_point(const Polytope& target, double margin = 1e-9);

}  // namespace rgnep
