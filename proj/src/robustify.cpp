#include "rgnep/robustify.hpp"

#include <stdexcept>
#include <string>

#include "rgnep/geometry.hpp"

namespace rgnep {

DualBlocks dualize_constraint(const UncertainConstraint& c,
                              const UncertaintySets& u) {
  const int N = static_cast<int>(c.a0.size());
  if (static_cast<int>(u.local.size()) != N)
    throw std::invalid_argument(
        "dualize_constraint: one local uncertainty set per agent required");
  DualBlocks d;
  d.agent_eq_x.reserve(N);
  d.agent_eq_y.reserve(N);
  d.agent_cost.reserve(N);
  for (int i = 0; i < N; ++i) {
    const Polytope& delta = u.local[i];
    if (delta.equality_rows() > 0)
      throw std::invalid_argument(
          "dualize_constraint: uncertainty sets must be inequality-only");
    if (c.P[i].cols() != delta.dim())
      throw std::invalid_argument("dualize_constraint: agent " +
                                  std::to_string(i) +
                                  ": P column count differs from the local "
                                  "uncertainty dimension");
    // max over {D_i delta <= d_i} of (P_i delta)' x_i equals, by LP duality
    // with the origin strictly interior, min d_i' y_i over
    //   y_i >= 0, D_i' y_i = P_i' x_i.
    d.agent_eq_x.push_back(c.P[i].transpose());
    d.agent_eq_y.push_back(-delta.A.transpose());
    d.agent_cost.push_back(delta.b);
  }
  const Polytope& shared = u.global;
  if (shared.equality_rows() > 0)
    throw std::invalid_argument(
        "dualize_constraint: uncertainty sets must be inequality-only");
  if (c.q.size() != shared.dim())
    throw std::invalid_argument(
        "dualize_constraint: q length differs from the shared uncertainty "
        "dimension");
  // min over {D delta <= d} of q' delta equals max of -d' z over
  //   z >= 0, D' z = -q, i.e. the RHS becomes b0 - (min d' z), handled by
  // moving d' z to the LHS.
  d.shared_eq = shared.A.transpose();
  d.shared_rhs = -c.q;
  d.shared_cost = shared.b;
  return d;
}

int DualizedGame::y_offset(int i, int k) const {
  int off = base.agents[i].dim;
  for (int kk = 0; kk < k; ++kk) off += duals[kk].agent_dual_dim(i);
  return off;
}

Eigen::VectorXd DualizedGame::coupling_value(
    const std::vector<Eigen::VectorXd>& xy, const Eigen::VectorXd& z) const {
  Eigen::VectorXd v = s_z * z - rhs;
  for (int i = 0; i < num_agents(); ++i) v += s_xy[i] * xy[i];
  return v;  // <= 0 when feasible
}

DualizedGame build_extended_game(const UncertainGame& game) {
  DualizedGame g;
  g.base = game;
  const int N = game.num_agents();
  const int c = static_cast<int>(game.coupling.size());
  for (const auto& con : game.coupling)
    g.duals.push_back(dualize_constraint(con, game.uncertainty));

  g.xy_dim.resize(N);
  g.xy_set.clear();
  g.s_xy.clear();
  for (int i = 0; i < N; ++i) {
    const int n = game.agents[i].dim;
    int m = 0;
    for (const auto& d : g.duals) m += d.agent_dual_dim(i);
    g.xy_dim[i] = n + m;

    // Feasible set of (x_i, y_i..): Omega_i rows on x, y >= 0, and the dual
    // equalities P_ik' x_i - D_ik' y_ik = 0 per constraint.
    const Polytope& omega = game.agents[i].local_set;
    int eq_rows = omega.equality_rows();
    for (const auto& d : g.duals)
      eq_rows += static_cast<int>(d.agent_eq_x[i].rows());
    Eigen::MatrixXd A =
        Eigen::MatrixXd::Zero(omega.inequality_rows() + m, n + m);
    Eigen::VectorXd b(A.rows());
    A.topLeftCorner(omega.inequality_rows(), n) = omega.A;
    b.head(omega.inequality_rows()) = omega.b;
    A.bottomRightCorner(m, m) = -Eigen::MatrixXd::Identity(m, m);
    b.tail(m).setZero();
    Eigen::MatrixXd Aeq = Eigen::MatrixXd::Zero(eq_rows, n + m);
    Eigen::VectorXd beq = Eigen::VectorXd::Zero(eq_rows);
    Aeq.topLeftCorner(omega.equality_rows(), n) = omega.Aeq;
    beq.head(omega.equality_rows()) = omega.beq;
    int row = omega.equality_rows(), ycol = n;
    for (const auto& d : g.duals) {
      const int p = static_cast<int>(d.agent_eq_x[i].rows());
      const int mi = d.agent_dual_dim(i);
      Aeq.block(row, 0, p, n) = d.agent_eq_x[i];
      Aeq.block(row, ycol, p, mi) = d.agent_eq_y[i];
      row += p;
      ycol += mi;
    }
    g.xy_set.emplace_back(std::move(A), std::move(b), std::move(Aeq),
                          std::move(beq));

    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(c, n + m);
    for (int k = 0; k < c; ++k) {
      s.row(k).head(n) = game.coupling[k].a0[i].transpose();
      s.row(k).segment(g.y_offset(i, k), g.duals[k].agent_dual_dim(i)) =
          g.duals[k].agent_cost[i].transpose();
    }
    g.s_xy.push_back(std::move(s));
  }

  // Shared dual block: all constraints stacked.
  g.zeta = 0;
  for (const auto& d : g.duals) g.zeta += d.shared_dual_dim();
  Eigen::MatrixXd zA = -Eigen::MatrixXd::Identity(g.zeta, g.zeta);
  Eigen::VectorXd zb = Eigen::VectorXd::Zero(g.zeta);
  int eqr = 0;
  for (const auto& d : g.duals) eqr += static_cast<int>(d.shared_eq.rows());
  Eigen::MatrixXd zAeq = Eigen::MatrixXd::Zero(eqr, g.zeta);
  Eigen::VectorXd zbeq(eqr);
  g.s_z = Eigen::MatrixXd::Zero(c, g.zeta);
  int row = 0, col = 0;
  for (int k = 0; k < c; ++k) {
    const auto& d = g.duals[k];
    const int p = static_cast<int>(d.shared_eq.rows());
    const int l = d.shared_dual_dim();
    zAeq.block(row, col, p, l) = d.shared_eq;
    zbeq.segment(row, p) = d.shared_rhs;
    g.s_z.row(k).segment(col, l) = d.shared_cost.transpose();
    row += p;
    col += l;
  }
  g.z_set = Polytope(std::move(zA), std::move(zb), std::move(zAeq),
                     std::move(zbeq));
  // The reformulation only exists when the shared dual system admits a
  // point; a phase-1 LP certifies it either way.
  if (g.zeta > 0 && !is_feasible(g.z_set))
    throw std::invalid_argument(
        "build_extended_game: the shared dual system { z >= 0, D'z = -q } is "
        "infeasible, so the robust counterpart has no solution");

  g.rhs.resize(c);
  for (int k = 0; k < c; ++k) g.rhs(k) = game.coupling[k].b0;
  return g;
}

ExtendedGame to_canonical(const DualizedGame& g, const CommGraph& graph) {
  const int N = g.num_agents();
  if (graph.N != N)
    throw std::invalid_argument(
        "to_canonical: graph size differs from the number of agents");
  ExtendedGame eg;
  eg.base = g.base;
  eg.graph = graph;
  eg.zeta = g.zeta;
  eg.c_in = g.num_constraints();
  eg.c_eq = N * g.zeta;
  eg.s_share = g.rhs / static_cast<double>(N);

  eg.agents.resize(N);
  eg.w_offset.resize(N);
  int off = 0;
  for (int i = 0; i < N; ++i) {
    AgentCanonical& a = eg.agents[i];
    a.n = g.base.agents[i].dim;
    a.m = g.xy_dim[i] - a.n;
    a.zeta = g.zeta;
    const int eta = a.eta();

    // W_i = xy_set x z_set on (x_i, y_i, z_i).
    a.W = Polytope::product(g.xy_set[i], g.z_set);

    // S_i w_i = a0_i' x_i + d_i' y_i + (1/N) d' z_i per constraint.
    a.S = Eigen::MatrixXd::Zero(eg.c_in, eta);
    a.S.leftCols(g.xy_dim[i]) = g.s_xy[i];
    a.S.rightCols(g.zeta) = g.s_z / static_cast<double>(N);

    // R_i = (L e_i) (x) I_zeta acting on the z copy, so that
    // sum_i R_i w_i = (L (x) I_zeta) col_i(z_i).
    a.R = Eigen::MatrixXd::Zero(eg.c_eq, eta);
    for (int j = 0; j < N; ++j)
      if (graph.L(j, i) != 0.0)
        a.R.block(j * g.zeta, a.n + a.m, g.zeta, g.zeta) =
            graph.L(j, i) *
            Eigen::MatrixXd::Identity(g.zeta, g.zeta);

    eg.w_offset[i] = off;
    off += eta;
  }
  eg.w_dim = off;
  return eg;
}

Eigen::VectorXd ExtendedGame::extract_x(const Eigen::VectorXd& w) const {
  Eigen::VectorXd x(base.total_dim());
  for (int i = 0; i < num_agents(); ++i)
    x.segment(base.offset(i), agents[i].n) =
        w.segment(w_offset[i], agents[i].n);
  return x;
}

Eigen::VectorXd ExtendedGame::extract_z(const Eigen::VectorXd& w,
                                        int i) const {
  return w.segment(w_offset[i] + agents[i].n + agents[i].m, zeta);
}

Eigen::VectorXd ExtendedGame::pseudo_gradient_w(
    const Eigen::VectorXd& w) const {
  const Eigen::VectorXd g = pseudo_gradient(base, extract_x(w));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(w_dim);
  for (int i = 0; i < num_agents(); ++i)
    out.segment(w_offset[i], agents[i].n) =
        g.segment(base.offset(i), agents[i].n);
  return out;
}

Eigen::VectorXd ExtendedGame::coupling_value(const Eigen::VectorXd& w) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(c_in);
  for (int i = 0; i < num_agents(); ++i)
    v += agents[i].S * w.segment(w_offset[i], agents[i].eta());
  return v;
}

namespace {

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()[0];
}

}  // namespace

double ExtendedGame::s_norm() const {
  double v = 0.0;
  for (const auto& a : agents) v = std::max(v, spectral_norm(a.S));
  return v;
}

double ExtendedGame::r_norm() const {
  double v = 0.0;
  for (const auto& a : agents) v = std::max(v, spectral_norm(a.R));
  return v;
}

}  // namespace rgnep
