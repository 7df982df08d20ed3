#include "rgnep/operators.hpp"

#include <cmath>
#include <stdexcept>

#include "rgnep/geometry.hpp"

namespace rgnep {

StackedPoint StackedPoint::zero(const ExtendedGame& eg) {
  StackedPoint p;
  p.w = Eigen::VectorXd::Zero(eg.w_dim);
  p.nu = Eigen::VectorXd::Zero(eg.num_agents() * eg.c_in);
  p.lambda = Eigen::VectorXd::Zero(eg.num_agents() * eg.c_in);
  p.chi = Eigen::VectorXd::Zero(eg.num_agents() * eg.c_eq);
  p.mu = Eigen::VectorXd::Zero(eg.num_agents() * eg.c_eq);
  return p;
}

Eigen::VectorXd StackedPoint::flatten() const {
  Eigen::VectorXd v(size());
  v << w, nu, lambda, chi, mu;
  return v;
}

StackedPoint StackedPoint::unflatten(const ExtendedGame& eg,
                                     const Eigen::VectorXd& v) {
  StackedPoint p = zero(eg);
  if (v.size() != p.size())
    throw std::invalid_argument("unflatten: size mismatch");
  int off = 0;
  auto take = [&](Eigen::VectorXd& dst) {
    dst = v.segment(off, dst.size());
    off += static_cast<int>(dst.size());
  };
  take(p.w);
  take(p.nu);
  take(p.lambda);
  take(p.chi);
  take(p.mu);
  return p;
}

double StackedPoint::squared_norm() const {
  return w.squaredNorm() + nu.squaredNorm() + lambda.squaredNorm() +
         chi.squaredNorm() + mu.squaredNorm();
}

double StackedPoint::norm() const { return std::sqrt(squared_norm()); }

StackedPoint& StackedPoint::operator+=(const StackedPoint& o) {
  w += o.w;
  nu += o.nu;
  lambda += o.lambda;
  chi += o.chi;
  mu += o.mu;
  return *this;
}

StackedPoint& StackedPoint::operator-=(const StackedPoint& o) {
  w -= o.w;
  nu -= o.nu;
  lambda -= o.lambda;
  chi -= o.chi;
  mu -= o.mu;
  return *this;
}

StackedPoint& StackedPoint::operator*=(double a) {
  w *= a;
  nu *= a;
  lambda *= a;
  chi *= a;
  mu *= a;
  return *this;
}

namespace {

// [L (x) I_bs] v on stacked per-agent blocks, reading only graph neighbors.
Eigen::VectorXd lap_apply(const CommGraph& g, const Eigen::VectorXd& v,
                          int bs, MessageLog* log, char field) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  if (bs == 0) return out;
  for (int i = 0; i < g.N; ++i) {
    Eigen::VectorXd acc = static_cast<double>(g.degree(i)) * v.segment(i * bs, bs);
    for (int j : g.neighbors[i]) {
      acc -= v.segment(j * bs, bs);
      if (log) log->record(i, j, field);
    }
    out.segment(i * bs, bs) = acc;
  }
  return out;
}

// Pseudo-gradient on w with read logging for quadratic cross terms.
Eigen::VectorXd f_tilde_logged(const ExtendedGame& eg, const Eigen::VectorXd& w,
                               MessageLog* log) {
  if (log) {
    for (int i = 0; i < eg.num_agents(); ++i)
      if (const auto* qc =
              std::get_if<QuadraticCost>(&eg.base.agents[i].cost))
        for (const auto& [j, Cj] : qc->cross) log->record(i, j, 'x');
  }
  return eg.pseudo_gradient_w(w);
}

}  // namespace

StackedPoint eval_A(const ExtendedGame& eg, const StackedPoint& p,
                    MessageLog* log) {
  const int N = eg.num_agents();
  StackedPoint out = StackedPoint::zero(eg);
  if (log) ++log->rounds;

  const Eigen::VectorXd lap_lambda =
      lap_apply(eg.graph, p.lambda, eg.c_in, log, 'l');
  const Eigen::VectorXd lap_nu = lap_apply(eg.graph, p.nu, eg.c_in, log, 'n');
  const Eigen::VectorXd lap_mu = lap_apply(eg.graph, p.mu, eg.c_eq, log, 'm');
  const Eigen::VectorXd lap_chi =
      lap_apply(eg.graph, p.chi, eg.c_eq, log, 'c');

  out.w = f_tilde_logged(eg, p.w, log);
  for (int i = 0; i < N; ++i) {
    const auto& a = eg.agents[i];
    const auto wi = p.w.segment(eg.w_offset[i], a.eta());
    const auto li = p.lambda.segment(i * eg.c_in, eg.c_in);
    const auto mi = p.mu.segment(i * eg.c_eq, eg.c_eq);

    out.w.segment(eg.w_offset[i], a.eta()) +=
        a.S.transpose() * li + a.R.transpose() * mi;
    out.nu.segment(i * eg.c_in, eg.c_in) =
        lap_lambda.segment(i * eg.c_in, eg.c_in);
    out.lambda.segment(i * eg.c_in, eg.c_in) =
        -(a.S * wi) + eg.s_share - lap_nu.segment(i * eg.c_in, eg.c_in) +
        lap_lambda.segment(i * eg.c_in, eg.c_in);
    out.chi.segment(i * eg.c_eq, eg.c_eq) =
        lap_mu.segment(i * eg.c_eq, eg.c_eq);
    out.mu.segment(i * eg.c_eq, eg.c_eq) =
        -(a.R * wi) - lap_chi.segment(i * eg.c_eq, eg.c_eq) +
        lap_mu.segment(i * eg.c_eq, eg.c_eq);
  }
  return out;
}

StackedPoint eval_A1(const ExtendedGame& eg, const StackedPoint& p) {
  const int N = eg.num_agents();
  StackedPoint out = StackedPoint::zero(eg);
  out.w = eg.pseudo_gradient_w(p.w);
  const Eigen::VectorXd lap_lambda =
      lap_apply(eg.graph, p.lambda, eg.c_in, nullptr, 'l');
  const Eigen::VectorXd lap_mu =
      lap_apply(eg.graph, p.mu, eg.c_eq, nullptr, 'm');
  for (int i = 0; i < N; ++i) {
    out.lambda.segment(i * eg.c_in, eg.c_in) =
        eg.s_share + lap_lambda.segment(i * eg.c_in, eg.c_in);
  }
  out.mu = lap_mu;
  return out;
}

StackedPoint eval_A2(const ExtendedGame& eg, const StackedPoint& p) {
  const int N = eg.num_agents();
  StackedPoint out = StackedPoint::zero(eg);
  const Eigen::VectorXd lap_nu = lap_apply(eg.graph, p.nu, eg.c_in, nullptr, 'n');
  const Eigen::VectorXd lap_lambda =
      lap_apply(eg.graph, p.lambda, eg.c_in, nullptr, 'l');
  const Eigen::VectorXd lap_chi =
      lap_apply(eg.graph, p.chi, eg.c_eq, nullptr, 'c');
  const Eigen::VectorXd lap_mu =
      lap_apply(eg.graph, p.mu, eg.c_eq, nullptr, 'm');
  for (int i = 0; i < N; ++i) {
    const auto& a = eg.agents[i];
    const auto wi = p.w.segment(eg.w_offset[i], a.eta());
    const auto li = p.lambda.segment(i * eg.c_in, eg.c_in);
    const auto mi = p.mu.segment(i * eg.c_eq, eg.c_eq);
    out.w.segment(eg.w_offset[i], a.eta()) =
        a.S.transpose() * li + a.R.transpose() * mi;
    out.nu.segment(i * eg.c_in, eg.c_in) =
        lap_lambda.segment(i * eg.c_in, eg.c_in);
    out.lambda.segment(i * eg.c_in, eg.c_in) =
        -(a.S * wi) - lap_nu.segment(i * eg.c_in, eg.c_in);
    out.chi.segment(i * eg.c_eq, eg.c_eq) =
        lap_mu.segment(i * eg.c_eq, eg.c_eq);
    out.mu.segment(i * eg.c_eq, eg.c_eq) =
        -(a.R * wi) - lap_chi.segment(i * eg.c_eq, eg.c_eq);
  }
  return out;
}

StackedPoint resolvent_B(const ExtendedGame& eg, const StackedPoint& p,
                         double projection_tol) {
  StackedPoint out = p;
  for (int i = 0; i < eg.num_agents(); ++i) {
    const auto& a = eg.agents[i];
    out.w.segment(eg.w_offset[i], a.eta()) = project_polytope(
        a.W, p.w.segment(eg.w_offset[i], a.eta()), projection_tol);
  }
  out.lambda = p.lambda.cwiseMax(0.0);
  return out;
}

double lipschitz_bound(const ExtendedGame& eg) {
  return lipschitz_F(eg.base) + 4.0 * eg.graph.kappa + eg.s_norm() +
         eg.r_norm();
}

StackedPoint Preconditioner::apply_inverse(const StackedPoint& p) const {
  StackedPoint out = p;
  int wo = 0;
  const int N = static_cast<int>(alpha.size());
  for (int i = 0; i < N; ++i) {
    const int eta = static_cast<int>(alpha[i].size());
    const int cin = static_cast<int>(beta[i].size());
    const int ceq = static_cast<int>(tau[i].size());
    out.w.segment(wo, eta).array() *= alpha[i].array();
    out.nu.segment(i * cin, cin).array() *= beta[i].array();
    out.lambda.segment(i * cin, cin).array() *= gamma[i].array();
    out.chi.segment(i * ceq, ceq).array() *= tau[i].array();
    out.mu.segment(i * ceq, ceq).array() *= theta[i].array();
    wo += eta;
  }
  return out;
}

StackedPoint Preconditioner::apply(const StackedPoint& p) const {
  StackedPoint out = p;
  int wo = 0;
  const int N = static_cast<int>(alpha.size());
  for (int i = 0; i < N; ++i) {
    const int eta = static_cast<int>(alpha[i].size());
    const int cin = static_cast<int>(beta[i].size());
    const int ceq = static_cast<int>(tau[i].size());
    out.w.segment(wo, eta).array() /= alpha[i].array();
    out.nu.segment(i * cin, cin).array() /= beta[i].array();
    out.lambda.segment(i * cin, cin).array() /= gamma[i].array();
    out.chi.segment(i * ceq, ceq).array() /= tau[i].array();
    out.mu.segment(i * ceq, ceq).array() /= theta[i].array();
    wo += eta;
  }
  return out;
}

double Preconditioner::weighted_squared_norm(const StackedPoint& p) const {
  double acc = 0.0;
  int wo = 0;
  const int N = static_cast<int>(alpha.size());
  for (int i = 0; i < N; ++i) {
    const int eta = static_cast<int>(alpha[i].size());
    const int cin = static_cast<int>(beta[i].size());
    const int ceq = static_cast<int>(tau[i].size());
    acc += (p.w.segment(wo, eta).array().square() / alpha[i].array()).sum();
    acc += (p.nu.segment(i * cin, cin).array().square() / beta[i].array())
               .sum();
    acc +=
        (p.lambda.segment(i * cin, cin).array().square() / gamma[i].array())
            .sum();
    acc += (p.chi.segment(i * ceq, ceq).array().square() / tau[i].array())
               .sum();
    acc += (p.mu.segment(i * ceq, ceq).array().square() / theta[i].array())
               .sum();
    wo += eta;
  }
  return acc;
}

namespace {

Preconditioner assemble(const ExtendedGame& eg, double ell_A,
                        const std::vector<double>& fractions) {
  if (ell_A <= 0.0)
    throw std::invalid_argument("preconditioner: ell_A must be positive");
  const int N = eg.num_agents();
  if (static_cast<int>(fractions.size()) != N)
    throw std::invalid_argument(
        "preconditioner: need one step fraction per agent");
  double max_fraction = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0 && f < 1.0))
      throw std::invalid_argument(
          "preconditioner: step fractions must lie strictly in (0, 1) so the "
          "steps stay below 1/ell_A");
    max_fraction = std::max(max_fraction, f);
  }
  Preconditioner phi;
  phi.alpha.resize(N);
  phi.beta.resize(N);
  phi.gamma.resize(N);
  phi.tau.resize(N);
  phi.theta.resize(N);
  for (int i = 0; i < N; ++i) {
    const double step = fractions[i] / ell_A;
    phi.alpha[i] = Eigen::VectorXd::Constant(eg.agents[i].eta(), step);
    phi.beta[i] = Eigen::VectorXd::Constant(eg.c_in, step);
    phi.gamma[i] = Eigen::VectorXd::Constant(eg.c_in, step);
    phi.tau[i] = Eigen::VectorXd::Constant(eg.c_eq, step);
    phi.theta[i] = Eigen::VectorXd::Constant(eg.c_eq, step);
  }
  phi.lambda_min = ell_A / max_fraction;
  phi.ell_phi = max_fraction;
  return phi;
}

}  // namespace

Preconditioner build_preconditioner(const ExtendedGame& eg, double ell_A,
                                    double fraction) {
  return assemble(eg, ell_A,
                  std::vector<double>(eg.num_agents(), fraction));
}

Preconditioner build_preconditioner(const ExtendedGame& eg, double ell_A,
                                    const std::vector<double>& fractions) {
  return assemble(eg, ell_A, fractions);
}

double natural_residual(const ExtendedGame& eg, const Preconditioner& phi,
                        const StackedPoint& p, bool phi_weighted) {
  const StackedPoint step = p - phi.apply_inverse(eval_A(eg, p));
  const StackedPoint diff = p - resolvent_B(eg, step);
  return phi_weighted ? std::sqrt(phi.weighted_squared_norm(diff))
                      : diff.norm();
}

}  // namespace rgnep
