#include "rgnep/model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

#include "rgnep/geometry.hpp"
#include "rgnep/robustify.hpp"

namespace rgnep {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

Polytope::Polytope(Eigen::MatrixXd A_, Eigen::VectorXd b_)
    : A(std::move(A_)), b(std::move(b_)) {
  require(A.rows() == b.size(), "polytope: A/b row mismatch");
  Aeq.resize(0, A.cols());
  beq.resize(0);
}

Polytope::Polytope(Eigen::MatrixXd A_, Eigen::VectorXd b_, Eigen::MatrixXd Aeq_,
                   Eigen::VectorXd beq_)
    : A(std::move(A_)),
      b(std::move(b_)),
      Aeq(std::move(Aeq_)),
      beq(std::move(beq_)) {
  require(A.rows() == b.size(), "polytope: A/b row mismatch");
  require(Aeq.rows() == beq.size(), "polytope: Aeq/beq row mismatch");
  if (A.rows() > 0 && Aeq.rows() > 0)
    require(A.cols() == Aeq.cols(), "polytope: A/Aeq column mismatch");
}

int Polytope::dim() const {
  if (A.rows() > 0 || A.cols() > 0) return static_cast<int>(A.cols());
  return static_cast<int>(Aeq.cols());
}

double Polytope::violation(const Eigen::VectorXd& x) const {
  double v = 0.0;
  if (A.rows() > 0) v = (A * x - b).maxCoeff();
  if (Aeq.rows() > 0)
    v = std::max(v, (Aeq * x - beq).cwiseAbs().maxCoeff());
  return v;
}

Polytope Polytope::box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  require(lo.size() == hi.size(), "box: lo/hi size mismatch");
  const int d = static_cast<int>(lo.size());
  std::vector<std::pair<int, double>> rows;  // (+/-(i+1), bound)
  for (int i = 0; i < d; ++i) {
    require(lo[i] <= hi[i], "box: lo > hi in coordinate " + std::to_string(i));
    if (std::isfinite(hi[i])) rows.push_back({i + 1, hi[i]});
    if (std::isfinite(lo[i])) rows.push_back({-(i + 1), -lo[i]});
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows.size(), d);
  Eigen::VectorXd b(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    const int i = std::abs(rows[r].first) - 1;
    A(r, i) = rows[r].first > 0 ? 1.0 : -1.0;
    b[r] = rows[r].second;
  }
  return Polytope(std::move(A), std::move(b));
}

Polytope Polytope::nonnegative_orthant(int d) {
  return Polytope(-Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d));
}

Polytope Polytope::product(const Polytope& p, const Polytope& q) {
  const int dp = p.dim(), dq = q.dim();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p.A.rows() + q.A.rows(), dp + dq);
  Eigen::VectorXd b(A.rows());
  A.topLeftCorner(p.A.rows(), dp) = p.A;
  A.bottomRightCorner(q.A.rows(), dq) = q.A;
  b << p.b, q.b;
  Eigen::MatrixXd Aeq =
      Eigen::MatrixXd::Zero(p.Aeq.rows() + q.Aeq.rows(), dp + dq);
  Eigen::VectorXd beq(Aeq.rows());
  Aeq.topLeftCorner(p.Aeq.rows(), dp) = p.Aeq;
  Aeq.bottomRightCorner(q.Aeq.rows(), dq) = q.Aeq;
  beq << p.beq, q.beq;
  return Polytope(std::move(A), std::move(b), std::move(Aeq), std::move(beq));
}

int UncertainGame::total_dim() const {
  int n = 0;
  for (const auto& a : agents) n += a.dim;
  return n;
}

int UncertainGame::offset(int i) const {
  int n = 0;
  for (int j = 0; j < i; ++j) n += agents[j].dim;
  return n;
}

Eigen::VectorXd pseudo_gradient(const UncertainGame& game,
                                const Eigen::VectorXd& x) {
  require(x.size() == game.total_dim(), "pseudo_gradient: bad point size");
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < game.num_agents(); ++i) {
    const Agent& a = game.agents[i];
    const int oi = game.offset(i);
    if (const auto* qc = std::get_if<QuadraticCost>(&a.cost)) {
      Eigen::VectorXd gi = qc->Q * x.segment(oi, a.dim) + qc->linear;
      for (const auto& [j, Cj] : qc->cross)
        gi += Cj * x.segment(game.offset(j), game.agents[j].dim);
      g.segment(oi, a.dim) = gi;
    } else {
      const auto& oc = std::get<OracleCost>(a.cost);
      require(static_cast<bool>(oc.gradient),
              "agent " + std::to_string(i) + ": oracle cost without gradient");
      Eigen::VectorXd gi = oc.gradient(x);
      require(gi.size() == a.dim,
              "agent " + std::to_string(i) + ": oracle gradient size mismatch");
      g.segment(oi, a.dim) = gi;
    }
  }
  return g;
}

double cost_eval(const UncertainGame& game, int i, const Eigen::VectorXd& x) {
  require(i >= 0 && i < game.num_agents(), "cost_eval: agent out of range");
  const Agent& a = game.agents[i];
  const int oi = game.offset(i);
  const Eigen::VectorXd xi = x.segment(oi, a.dim);
  if (const auto* qc = std::get_if<QuadraticCost>(&a.cost)) {
    double v = 0.5 * xi.dot(qc->Q * xi) + qc->linear.dot(xi);
    for (const auto& [j, Cj] : qc->cross)
      v += xi.dot(Cj * x.segment(game.offset(j), game.agents[j].dim));
    return v;
  }
  const auto& oc = std::get<OracleCost>(a.cost);
  require(static_cast<bool>(oc.value),
          "agent " + std::to_string(i) + ": oracle cost without value");
  return oc.value(x);
}

Eigen::MatrixXd game_jacobian(const UncertainGame& game) {
  const int n = game.total_dim();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < game.num_agents(); ++i) {
    const auto* qc = std::get_if<QuadraticCost>(&game.agents[i].cost);
    require(qc != nullptr, "game_jacobian: agent " + std::to_string(i) +
                               " has a non-quadratic cost");
    const int oi = game.offset(i), ni = game.agents[i].dim;
    G.block(oi, oi, ni, ni) = qc->Q;
    for (const auto& [j, Cj] : qc->cross)
      G.block(oi, game.offset(j), ni, game.agents[j].dim) = Cj;
  }
  return G;
}

double lipschitz_F(const UncertainGame& game) {
  const Eigen::MatrixXd G = game_jacobian(game);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
  return G.size() == 0 ? 0.0 : svd.singularValues()[0];
}

bool ValidationReport::ok() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks)
    os << (c.passed ? "[ok]   " : "[FAIL] ") << c.name
       << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
  return os.str();
}

namespace {

CheckResult check_uncertainty_polytope(const Polytope& p,
                                       const std::string& name) {
  CheckResult r{name, false, ""};
  if (p.equality_rows() > 0) {
    r.detail = "uncertainty sets must be inequality-only";
    return r;
  }
  if (!is_bounded(p)) {
    r.detail = "unbounded (recession cone is nontrivial)";
    return r;
  }
  // Strict interiority of the origin: every row must have d > 0.
  if (p.inequality_rows() == 0 || p.b.minCoeff() <= 0.0) {
    r.detail = "origin is not strictly interior (needs d > 0 in every row)";
    return r;
  }
  r.passed = true;
  return r;
}

}  // namespace

ValidationReport validate_game(const UncertainGame& game, double tol) {
  ValidationReport rep;
  const int N = game.num_agents();

  // -- structural sizes ---------------------------------------------------
  {
    CheckResult r{"structure", true, ""};
    for (int i = 0; i < N && r.passed; ++i) {
      if (game.agents[i].local_set.dim() != game.agents[i].dim) {
        r.passed = false;
        r.detail = "agent " + std::to_string(i) + ": local set dimension " +
                   std::to_string(game.agents[i].local_set.dim()) +
                   " != strategy dimension " +
                   std::to_string(game.agents[i].dim);
      }
    }
    if (static_cast<int>(game.uncertainty.local.size()) != N) {
      r.passed = false;
      r.detail = "expected one local uncertainty set per agent";
    }
    for (const auto& c : game.coupling) {
      if (static_cast<int>(c.a0.size()) != N ||
          static_cast<int>(c.P.size()) != N) {
        r.passed = false;
        r.detail = "coupling constraint must carry a0 and P for every agent";
        break;
      }
      for (int i = 0; i < N; ++i) {
        if (c.a0[i].size() != game.agents[i].dim ||
            c.P[i].rows() != game.agents[i].dim ||
            c.P[i].cols() != game.uncertainty.local[i].dim()) {
          r.passed = false;
          r.detail = "agent " + std::to_string(i) +
                     ": a0/P sizes inconsistent with dimensions";
          break;
        }
      }
      if (c.q.size() != game.uncertainty.global.dim()) {
        r.passed = false;
        r.detail = "q length differs from the shared uncertainty dimension";
      }
    }
    rep.checks.push_back(std::move(r));
    if (!rep.checks.back().passed) return rep;  // later checks assume sizes
  }

  // -- cost convexity -----------------------------------------------------
  for (int i = 0; i < N; ++i) {
    if (const auto* qc = std::get_if<QuadraticCost>(&game.agents[i].cost)) {
      CheckResult r{"cost convexity, agent " + std::to_string(i), true, ""};
      const Eigen::MatrixXd sym = 0.5 * (qc->Q + qc->Q.transpose());
      if ((qc->Q - qc->Q.transpose()).cwiseAbs().maxCoeff() > tol) {
        r.passed = false;
        r.detail = "Q is not symmetric";
      } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
        if (es.eigenvalues().minCoeff() < -tol) {
          r.passed = false;
          r.detail =
              "Q has negative eigenvalue " + std::to_string(es.eigenvalues().minCoeff());
        }
      }
      rep.checks.push_back(std::move(r));
    }
  }

  // -- pseudo-gradient monotonicity (quadratic games only) -----------------
  {
    bool all_quadratic = true;
    for (const auto& a : game.agents)
      if (!std::holds_alternative<QuadraticCost>(a.cost)) all_quadratic = false;
    if (all_quadratic) {
      CheckResult r{"pseudo-gradient monotonicity", true, ""};
      const Eigen::MatrixXd G = game_jacobian(game);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          0.5 * (G + G.transpose()));
      const double lam = es.eigenvalues().minCoeff();
      if (lam < -tol) {
        r.passed = false;
        r.detail = "game Jacobian symmetric part has eigenvalue " +
                   std::to_string(lam);
      } else {
        r.detail = "smallest eigenvalue " + std::to_string(lam);
      }
      rep.checks.push_back(std::move(r));
    }
  }

  // -- local sets ----------------------------------------------------------
  for (int i = 0; i < N; ++i) {
    CheckResult r{"local set, agent " + std::to_string(i), true, ""};
    if (!is_feasible(game.agents[i].local_set)) {
      r.passed = false;
      r.detail = "empty";
    } else if (!is_bounded(game.agents[i].local_set)) {
      r.passed = false;
      r.detail = "unbounded";
    }
    rep.checks.push_back(std::move(r));
  }

  // -- uncertainty sets ----------------------------------------------------
  for (int i = 0; i < N; ++i)
    rep.checks.push_back(check_uncertainty_polytope(
        game.uncertainty.local[i], "uncertainty set, agent " + std::to_string(i)));
  rep.checks.push_back(
      check_uncertainty_polytope(game.uncertainty.global, "shared uncertainty set"));
  if (!rep.ok()) return rep;

  // -- robust feasibility (Slater-type) -------------------------------------
  // X is nonempty iff the dualized system admits a point; build it and run a
  // feasibility LP.  Strict feasibility of the coupled inequality is reported
  // too, since the multiplier analysis relies on it.
  {
    CheckResult r{"robustly feasible set", true, ""};
    try {
      const DualizedGame dg = build_extended_game(game);
      // Variables: (x_i, y_i..) per agent stacked, then z.
      int total = dg.zeta;
      for (int i = 0; i < N; ++i) total += dg.xy_dim[i];
      std::vector<Polytope> blocks;
      for (int i = 0; i < N; ++i) blocks.push_back(dg.xy_set[i]);
      blocks.push_back(dg.z_set);
      Polytope prod = blocks[0];
      for (size_t k = 1; k < blocks.size(); ++k)
        prod = Polytope::product(prod, blocks[k]);
      // Append the coupled inequalities.
      const int c = dg.num_constraints();
      Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(c, total);
      int off = 0;
      for (int i = 0; i < N; ++i) {
        rows.middleCols(off, dg.xy_dim[i]) = dg.s_xy[i];
        off += dg.xy_dim[i];
      }
      rows.middleCols(off, dg.zeta) = dg.s_z;
      Eigen::MatrixXd A(prod.A.rows() + c, total);
      A << prod.A, rows;
      Eigen::VectorXd b(A.rows());
      b << prod.b, dg.rhs;
      Polytope full(std::move(A), std::move(b), prod.Aeq, prod.beq);
      if (!is_feasible(full)) {
        r.passed = false;
        r.detail = "empty: no strategy satisfies the robust constraints";
      } else if (!has_interior_point(full, 1e-7)) {
        r.detail = "nonempty but no strictly feasible point was found";
      }
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("dualization failed: ") + e.what();
    }
    rep.checks.push_back(std::move(r));
  }

  return rep;
}

}  // namespace rgnep
