#include "rgnep/solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "rgnep/geometry.hpp"

namespace rgnep {

Schedule schedule_params(int k, double sigma_bar, double ell_phi,
                         RelaxationRule rule) {
  if (k < 0) throw std::invalid_argument("schedule_params: negative index");
  if (!(sigma_bar >= 0.0 && sigma_bar < 1.0))
    throw std::invalid_argument(
        "schedule_params: sigma_bar must lie in [0, 1)");
  if (!(ell_phi >= 0.0))
    throw std::invalid_argument("schedule_params: ell_phi must be nonnegative");
  Schedule s;
  s.sigma = sigma_bar * (1.0 - 1.0 / static_cast<double>(k + 1));
  const double num = rule == RelaxationRule::conservative
                         ? 2.0 * (1.0 - sigma_bar) * (1.0 - sigma_bar)
                         : 2.0 * (1.0 - sigma_bar * sigma_bar);
  s.rho = num / ((1.0 + ell_phi) *
                 (2.0 * s.sigma * s.sigma - s.sigma + 1.0));
  if (!(s.rho > 0.0 && s.rho <= 1.0))
    throw std::domain_error(
        "schedule_params: relaxation weight rho_k = " + std::to_string(s.rho) +
        " escapes (0, 1]; pick a larger sigma_bar or a larger ell_phi");
  return s;
}

StackedPoint step_inertial(const StackedPoint& current,
                           const StackedPoint& previous, double sigma) {
  return current + sigma * (current - previous);
}

StackedPoint step_forward_backward(const ExtendedGame& eg,
                                   const Preconditioner& phi,
                                   const StackedPoint& Z,
                                   const StackedPoint* AZ, MessageLog* log) {
  const StackedPoint a = AZ ? *AZ : eval_A(eg, Z, log);
  return resolvent_B(eg, Z - phi.apply_inverse(a));
}

StackedPoint step_relax(const ExtendedGame& eg, const Preconditioner& phi,
                        const StackedPoint& Z, const StackedPoint& Y,
                        double rho, const StackedPoint* AZ, MessageLog* log) {
  const StackedPoint az = AZ ? *AZ : eval_A(eg, Z, log);
  const StackedPoint ay = eval_A(eg, Y, log);
  const StackedPoint T = Y - phi.apply_inverse(ay - az);
  return (1.0 - rho) * Z + rho * T;
}

Preconditioner make_preconditioner(const ExtendedGame& eg,
                                   const PreconditionerSpec& spec) {
  const double ell_A = lipschitz_bound(eg);
  switch (spec.kind) {
    case PreconditionerSpec::Kind::uniform:
      return build_preconditioner(eg, ell_A, spec.fraction);
    case PreconditionerSpec::Kind::evenly_spaced: {
      // Fractions (N - i) / (N + 1), the largest step to the first agent.
      const int N = eg.num_agents();
      std::vector<double> fr(N);
      for (int i = 0; i < N; ++i)
        fr[i] = static_cast<double>(N - i) / static_cast<double>(N + 1);
      return build_preconditioner(eg, ell_A, fr);
    }
    case PreconditionerSpec::Kind::custom:
      return build_preconditioner(eg, ell_A, spec.fractions);
  }
  throw std::logic_error("make_preconditioner: unreachable");
}

double lyapunov_value(const Preconditioner& phi, const StackedPoint& current,
                      const StackedPoint& previous, const StackedPoint& anchor,
                      double sigma) {
  const double cur = phi.weighted_squared_norm(current - anchor);
  const double prev = phi.weighted_squared_norm(previous - anchor);
  const double step = phi.weighted_squared_norm(current - previous);
  return cur - sigma * prev + (2.0 * sigma * sigma - sigma + 1.0) * step;
}

RunReport run_distributed(const ExtendedGame& eg, const SolverParams& params) {
  if (params.tolerance <= 0.0)
    throw std::invalid_argument("run_distributed: tolerance must be positive");
  if (params.max_iterations < 1)
    throw std::invalid_argument("run_distributed: max_iterations must be >= 1");

  RunReport rep;
  rep.ell_A = lipschitz_bound(eg);
  const Preconditioner phi = make_preconditioner(eg, params.precond);
  rep.ell_phi = phi.ell_phi;

  // Initial point: zeros, with the strategy blocks pulled into their local
  // sets and the inequality multipliers clamped (no-ops for actual zeros).
  StackedPoint W = params.initial ? *params.initial : StackedPoint::zero(eg);
  W = resolvent_B(eg, W);
  StackedPoint W_prev = W;

  std::vector<StackedPoint> traj;
  traj.push_back(W);
  std::vector<double> sigmas;

  const bool timing = params.record_timing;
  const auto t0 = std::chrono::steady_clock::now();

  for (int k = 0; k < params.max_iterations; ++k) {
    Schedule sched;
    if (params.tseng) {
      sched.sigma = 0.0;
      sched.rho = 1.0;
    } else {
      sched = schedule_params(k, params.sigma_bar, phi.ell_phi,
                              params.relaxation);
      if (params.forced_sigma) sched.sigma = *params.forced_sigma;
      if (params.forced_rho) sched.rho = *params.forced_rho;
    }

    StackedPoint W_next;
    if (params.tseng) {
      // Plain forward-backward-forward, no extrapolation state.
      const StackedPoint AW = eval_A(eg, W, &rep.log);
      const StackedPoint Y = resolvent_B(eg, W - phi.apply_inverse(AW));
      const StackedPoint AY = eval_A(eg, Y, &rep.log);
      W_next = Y - phi.apply_inverse(AY - AW);
    } else {
      const StackedPoint Z = step_inertial(W, W_prev, sched.sigma);
      const StackedPoint AZ = eval_A(eg, Z, &rep.log);
      const StackedPoint Y = step_forward_backward(eg, phi, Z, &AZ, &rep.log);
      W_next = step_relax(eg, phi, Z, Y, sched.rho, &AZ, &rep.log);
    }

    W_prev = W;
    W = std::move(W_next);
    traj.push_back(W);
    sigmas.push_back(sched.sigma);
    rep.iterations = k + 1;

    const double res =
        natural_residual(eg, phi, W, params.phi_norm_residual);
    rep.residuals.push_back(res);
    if (timing) {
      const auto now = std::chrono::steady_clock::now();
      rep.wall_ms.push_back(
          std::chrono::duration<double, std::milli>(now - t0).count());
    } else {
      rep.wall_ms.push_back(0.0);
    }
    if (res < params.tolerance) {
      rep.converged = true;
      break;
    }
  }

  rep.final_point = W;
  rep.x = eg.extract_x(W.w);

  // Energy trace against the last iterate standing in for the solution.
  rep.lyapunov.resize(rep.iterations);
  for (int k = 1; k <= rep.iterations; ++k)
    rep.lyapunov[k - 1] =
        lyapunov_value(phi, traj[k], traj[k - 1], W, sigmas[k - 1]);

  if (params.keep_history) {
    rep.x_history.reserve(traj.size());
    for (const auto& p : traj) rep.x_history.push_back(eg.extract_x(p.w));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Centralized reference
// ---------------------------------------------------------------------------

namespace {

struct FlatPoint {
  std::vector<Eigen::VectorXd> xy;
  Eigen::VectorXd z;
  Eigen::VectorXd lambda;

  FlatPoint operator-(const FlatPoint& o) const {
    FlatPoint r = *this;
    for (size_t i = 0; i < xy.size(); ++i) r.xy[i] -= o.xy[i];
    r.z -= o.z;
    r.lambda -= o.lambda;
    return r;
  }
  double norm() const {
    double s = z.squaredNorm() + lambda.squaredNorm();
    for (const auto& v : xy) s += v.squaredNorm();
    return std::sqrt(s);
  }
};

FlatPoint flat_op(const DualizedGame& g, const FlatPoint& p) {
  const int N = g.num_agents();
  Eigen::VectorXd x(g.base.total_dim());
  for (int i = 0; i < N; ++i)
    x.segment(g.base.offset(i), g.base.agents[i].dim) =
        p.xy[i].head(g.base.agents[i].dim);
  const Eigen::VectorXd f = pseudo_gradient(g.base, x);

  FlatPoint out = p;
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd gi = Eigen::VectorXd::Zero(g.xy_dim[i]);
    gi.head(g.base.agents[i].dim) =
        f.segment(g.base.offset(i), g.base.agents[i].dim);
    out.xy[i] = gi + g.s_xy[i].transpose() * p.lambda;
  }
  out.z = g.s_z.transpose() * p.lambda;
  out.lambda = -g.coupling_value(p.xy, p.z);
  return out;
}

FlatPoint flat_resolvent(const DualizedGame& g, const FlatPoint& p) {
  FlatPoint out = p;
  for (int i = 0; i < g.num_agents(); ++i)
    out.xy[i] = project_polytope(g.xy_set[i], p.xy[i]);
  out.z = project_polytope(g.z_set, p.z);
  out.lambda = p.lambda.cwiseMax(0.0);
  return out;
}

}  // namespace

CentralizedReport run_centralized(const DualizedGame& g,
                                  const CentralizedParams& params) {
  const int N = g.num_agents();
  double coupling_norm = 0.0;
  {
    int total = g.zeta;
    for (int i = 0; i < N; ++i) total += g.xy_dim[i];
    Eigen::MatrixXd C =
        Eigen::MatrixXd::Zero(g.num_constraints(), total);
    int off = 0;
    for (int i = 0; i < N; ++i) {
      C.middleCols(off, g.xy_dim[i]) = g.s_xy[i];
      off += g.xy_dim[i];
    }
    C.middleCols(off, g.zeta) = g.s_z;
    if (C.size() > 0) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
      coupling_norm = svd.singularValues()[0];
    }
  }
  const double gamma =
      params.step_fraction / (lipschitz_F(g.base) + coupling_norm);

  FlatPoint v;
  v.xy.resize(N);
  for (int i = 0; i < N; ++i) v.xy[i] = Eigen::VectorXd::Zero(g.xy_dim[i]);
  v.z = Eigen::VectorXd::Zero(g.zeta);
  v.lambda = Eigen::VectorXd::Zero(g.num_constraints());
  v = flat_resolvent(g, v);

  CentralizedReport rep;
  for (int k = 0; k < params.max_iterations; ++k) {
    FlatPoint av = flat_op(g, v);
    FlatPoint step = v;
    for (int i = 0; i < N; ++i) step.xy[i] -= gamma * av.xy[i];
    step.z -= gamma * av.z;
    step.lambda -= gamma * av.lambda;
    const FlatPoint y = flat_resolvent(g, step);
    const FlatPoint ay = flat_op(g, y);
    FlatPoint next = y;
    for (int i = 0; i < N; ++i)
      next.xy[i] -= gamma * (ay.xy[i] - av.xy[i]);
    next.z -= gamma * (ay.z - av.z);
    next.lambda -= gamma * (ay.lambda - av.lambda);
    v = next;
    rep.iterations = k + 1;

    // Natural residual of the fresh iterate.
    FlatPoint probe = v;
    const FlatPoint a = flat_op(g, v);
    for (int i = 0; i < N; ++i) probe.xy[i] -= gamma * a.xy[i];
    probe.z -= gamma * a.z;
    probe.lambda -= gamma * a.lambda;
    rep.residual = (v - flat_resolvent(g, probe)).norm();
    if (rep.residual < params.tolerance) {
      rep.converged = true;
      break;
    }
  }

  rep.xy = v.xy;
  rep.z = v.z;
  rep.lambda = v.lambda;
  rep.x.resize(g.base.total_dim());
  for (int i = 0; i < N; ++i)
    rep.x.segment(g.base.offset(i), g.base.agents[i].dim) =
        v.xy[i].head(g.base.agents[i].dim);
  return rep;
}

}  // namespace rgnep
