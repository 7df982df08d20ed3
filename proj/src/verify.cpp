#include "rgnep/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rgnep/geometry.hpp"

namespace rgnep {

std::string FeasibilityReport::summary() const {
  std::ostringstream os;
  os << (feasible ? "robustly feasible" : "ROBUST FEASIBILITY VIOLATED")
     << ", min slack " << min_slack;
  if (!local_ok) os << ", local set violation";
  return os.str();
}

FeasibilityReport check_robust_feasibility(const UncertainGame& game,
                                           const Eigen::VectorXd& x,
                                           double tol) {
  FeasibilityReport rep;
  rep.local_ok = true;
  rep.local_violation.resize(game.num_agents());
  for (int i = 0; i < game.num_agents(); ++i) {
    const double v = game.agents[i].local_set.violation(
        x.segment(game.offset(i), game.agents[i].dim));
    rep.local_violation[i] = v;
    if (v > 1e-8) rep.local_ok = false;
  }

  rep.min_slack = std::numeric_limits<double>::infinity();
  bool coupled_ok = true;
  for (size_t k = 0; k < game.coupling.size(); ++k) {
    const WorstCase wc =
        worst_case_value(game.coupling[k], game.uncertainty, x);
    ConstraintCheck c;
    c.constraint = static_cast<int>(k);
    c.lhs_max = wc.lhs_max;
    c.rhs_min = wc.rhs_min;
    c.slack = wc.slack();
    c.ok = c.slack >= -tol;
    c.lhs_argmax = wc.lhs_argmax;
    c.rhs_argmin = wc.rhs_argmin;
    rep.min_slack = std::min(rep.min_slack, c.slack);
    coupled_ok = coupled_ok && c.ok;
    rep.constraints.push_back(std::move(c));
  }
  if (game.coupling.empty()) rep.min_slack = 0.0;
  rep.feasible = coupled_ok && rep.local_ok;
  return rep;
}

double best_response_gap(const UncertainGame& game, const Eigen::VectorXd& x,
                         int agent, const BestResponseParams& params) {
  const int N = game.num_agents();
  if (agent < 0 || agent >= N)
    throw std::invalid_argument("best_response_gap: agent out of range");
  const Agent& ag = game.agents[agent];
  const auto* qc = std::get_if<QuadraticCost>(&ag.cost);
  if (qc == nullptr)
    throw std::invalid_argument(
        "best_response_gap: requires a quadratic cost for the deviating "
        "agent");
  const int n = ag.dim;
  const int c = static_cast<int>(game.coupling.size());

  // Worst-case budget left to the deviator in each coupled constraint once
  // the opponents are frozen at x.
  Eigen::VectorXd budget(c);
  std::vector<int> ydim(c);
  int m = 0;
  for (int k = 0; k < c; ++k) {
    const auto& con = game.coupling[k];
    const WorstCase wc = worst_case_value(con, game.uncertainty, x);
    const int ni = static_cast<int>(con.a0[agent].size());
    const Eigen::VectorXd xi = x.segment(game.offset(agent), ni);
    double own = con.a0[agent].dot(xi);
    if (game.uncertainty.local[agent].dim() > 0) {
      const Eigen::VectorXd wdir = con.P[agent].transpose() * xi;
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& v : enumerate_vertices(game.uncertainty.local[agent]))
        best = std::max(best, wdir.dot(v));
      own += best;
    }
    // At a numerically tight point the raw budget can sit epsilon below
    // the deviator's own minimum, emptying the deviation set; keep the
    // current contribution admissible so the gap stays well defined.
    budget(k) = std::max(wc.rhs_min - (wc.lhs_max - own), own);
    ydim[k] = game.uncertainty.local[agent].inequality_rows();
    m += ydim[k];
  }

  // Deviator's robustly feasible set, dualized:
  //   u = (x_i, y_1..y_c), x_i in Omega_i, y >= 0,
  //   P_ik' x_i = D_i' y_k,  a0_ik' x_i + d_i' y_k <= budget_k.
  const Polytope& omega = ag.local_set;
  const Polytope& delta = game.uncertainty.local[agent];
  const int dim = n + m;
  Eigen::MatrixXd A =
      Eigen::MatrixXd::Zero(omega.inequality_rows() + m + c, dim);
  Eigen::VectorXd b(A.rows());
  A.topLeftCorner(omega.inequality_rows(), n) = omega.A;
  b.head(omega.inequality_rows()) = omega.b;
  A.block(omega.inequality_rows(), n, m, m) =
      -Eigen::MatrixXd::Identity(m, m);
  b.segment(omega.inequality_rows(), m).setZero();
  int yoff = n;
  for (int k = 0; k < c; ++k) {
    const int r = omega.inequality_rows() + m + k;
    A.row(r).head(n) = game.coupling[k].a0[agent].transpose();
    A.row(r).segment(yoff, ydim[k]) = delta.b.transpose();
    b(r) = budget(k);
    yoff += ydim[k];
  }
  const int p = delta.dim();
  Eigen::MatrixXd Aeq =
      Eigen::MatrixXd::Zero(omega.equality_rows() + c * p, dim);
  Eigen::VectorXd beq = Eigen::VectorXd::Zero(Aeq.rows());
  Aeq.topLeftCorner(omega.equality_rows(), n) = omega.Aeq;
  beq.head(omega.equality_rows()) = omega.beq;
  yoff = n;
  for (int k = 0; k < c; ++k) {
    Aeq.block(omega.equality_rows() + k * p, 0, p, n) =
        game.coupling[k].P[agent].transpose();
    Aeq.block(omega.equality_rows() + k * p, yoff, p, ydim[k]) =
        -delta.A.transpose();
    yoff += ydim[k];
  }
  Polytope feas(std::move(A), std::move(b), std::move(Aeq), std::move(beq));

  // Projected gradient on u; only the x_i part carries cost.  The deviation
  // set is typically a thin wedge (budget row, dual equality and sign
  // constraints all active together), where the cyclic projector converges
  // too slowly, so prefer the exact small-scale projector.
  auto project = [&](const Eigen::VectorXd& v) {
    try {
      return project_polytope_small(feas, v);
    } catch (const std::invalid_argument&) {
      return project_polytope(feas, v);  // too large for enumeration
    }
  };
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(qc->Q);
  const double lips = std::max(svd.singularValues()[0], 1e-12);
  const double step = 1.0 / lips;
  Eigen::VectorXd fixed = qc->linear;
  for (const auto& [j, Cj] : qc->cross)
    fixed += Cj * x.segment(game.offset(j), game.agents[j].dim);

  Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
  u.head(n) = x.segment(game.offset(agent), n);
  u = project(u);
  for (int it = 0; it < params.max_iterations; ++it) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    g.head(n) = qc->Q * u.head(n) + fixed;
    const Eigen::VectorXd next = project(u - step * g);
    const double move = (next - u).norm();
    u = next;
    if (move <= params.tolerance) break;
  }

  Eigen::VectorXd x_dev = x;
  x_dev.segment(game.offset(agent), n) = u.head(n);
  return cost_eval(game, agent, x) - cost_eval(game, agent, x_dev);
}

double KktResidual::aggregate() const {
  return std::max({stationarity, complementarity, primal, lambda_consensus,
                   mu_consensus, z_consensus, dual_sign});
}

namespace {

double max_pairwise_gap(const std::vector<Eigen::VectorXd>& blocks) {
  double g = 0.0;
  for (size_t i = 0; i < blocks.size(); ++i)
    for (size_t j = i + 1; j < blocks.size(); ++j)
      if (blocks[i].size() > 0)
        g = std::max(g, (blocks[i] - blocks[j]).cwiseAbs().maxCoeff());
  return g;
}

}  // namespace

ConsensusGaps consensus_gaps(const ExtendedGame& eg, const StackedPoint& p) {
  const int N = eg.num_agents();
  std::vector<Eigen::VectorXd> zs, ls, ms;
  for (int i = 0; i < N; ++i) {
    zs.push_back(eg.extract_z(p.w, i));
    ls.push_back(p.lambda.segment(i * eg.c_in, eg.c_in));
    ms.push_back(p.mu.segment(i * eg.c_eq, eg.c_eq));
  }
  ConsensusGaps g;
  g.z = max_pairwise_gap(zs);
  g.lambda = max_pairwise_gap(ls);
  g.mu = max_pairwise_gap(ms);
  return g;
}

KktResidual kkt_residual(const ExtendedGame& eg, const StackedPoint& p,
                         const Preconditioner* phi) {
  const int N = eg.num_agents();
  KktResidual r;

  // Stationarity: projected-gradient displacement of the w block under the
  // agents' own multipliers.
  const Eigen::VectorXd f = eg.pseudo_gradient_w(p.w);
  double stat_sq = 0.0;
  for (int i = 0; i < N; ++i) {
    const auto& a = eg.agents[i];
    const Eigen::VectorXd wi = p.w.segment(eg.w_offset[i], a.eta());
    Eigen::VectorXd grad =
        f.segment(eg.w_offset[i], a.eta()) +
        a.S.transpose() * p.lambda.segment(i * eg.c_in, eg.c_in) +
        a.R.transpose() * p.mu.segment(i * eg.c_eq, eg.c_eq);
    if (phi) grad.array() *= phi->alpha[i].array();
    const Eigen::VectorXd proj = project_polytope(a.W, wi - grad);
    stat_sq += (wi - proj).squaredNorm();
  }
  r.stationarity = std::sqrt(stat_sq);

  // Complementarity and primal feasibility of the coupled inequalities,
  // using the average multiplier.
  const Eigen::VectorXd coupling =
      eg.coupling_value(p.w) - static_cast<double>(N) * eg.s_share;
  Eigen::VectorXd lam_avg = Eigen::VectorXd::Zero(eg.c_in);
  for (int i = 0; i < N; ++i)
    lam_avg += p.lambda.segment(i * eg.c_in, eg.c_in);
  lam_avg /= static_cast<double>(N);
  r.complementarity =
      eg.c_in == 0 ? 0.0 : std::abs(lam_avg.dot(coupling));
  double primal = eg.c_in == 0 ? 0.0 : coupling.cwiseMax(0.0).maxCoeff();
  for (int i = 0; i < N; ++i)
    primal = std::max(
        primal,
        eg.agents[i].W.violation(p.w.segment(eg.w_offset[i], eg.agents[i].eta())));
  r.primal = primal;
  r.dual_sign =
      p.lambda.size() == 0 ? 0.0 : std::max(0.0, -p.lambda.minCoeff());

  const ConsensusGaps g = consensus_gaps(eg, p);
  r.lambda_consensus = g.lambda;
  r.mu_consensus = g.mu;
  r.z_consensus = g.z;
  return r;
}

}  // namespace rgnep
