#include "rgnep/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <vector>

namespace rgnep {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-9;

// ---------------------------------------------------------------------------
// Dense two-phase simplex on the tableau, Bland's rule throughout.
// ---------------------------------------------------------------------------

struct Tableau {
  Eigen::MatrixXd T;        // m x (n + 1), last column is the RHS
  Eigen::RowVectorXd cost;  // length n + 1, last entry is -objective
  std::vector<int> basis;   // basic column per row

  int rows() const { return static_cast<int>(T.rows()); }
  int cols() const { return static_cast<int>(T.cols()) - 1; }

  void pivot(int r, int c) {
    T.row(r) /= T(r, c);
    for (int i = 0; i < rows(); ++i)
      if (i != r && std::abs(T(i, c)) > 0.0) T.row(i) -= T(i, c) * T.row(r);
    if (std::abs(cost(c)) > 0.0) cost -= cost(c) * T.row(r);
    basis[r] = c;
  }

  // Optimize over entering columns < limit.  Returns false on unboundedness.
  bool optimize(int limit) {
    const int cap = 200000;
    for (int iter = 0; iter < cap; ++iter) {
      int enter = -1;
      for (int j = 0; j < limit; ++j)
        if (cost(j) < -kCostTol) {
          enter = j;
          break;  // Bland: smallest improving index
        }
      if (enter < 0) return true;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < rows(); ++r) {
        if (T(r, enter) > kPivotTol) {
          const double ratio = T(r, cols()) / T(r, enter);
          if (ratio < best - 1e-15 ||
              (ratio < best + 1e-15 &&
               (leave < 0 || basis[r] < basis[leave]))) {
            best = ratio;
            leave = r;
          }
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw std::runtime_error("simplex: iteration cap exceeded");
  }
};

struct StandardForm {
  Eigen::MatrixXd M;   // rows x nv
  Eigen::VectorXd r;   // >= 0
  Eigen::VectorXd c;   // objective on the nv structural columns
  int dim = 0;         // original dimension (x = v[0..d) - v[d..2d))
};

StandardForm to_standard_form(const Eigen::VectorXd& obj, const Polytope& p) {
  const int d = p.dim();
  const int mi = p.inequality_rows(), me = p.equality_rows();
  const int nv = 2 * d + mi;
  StandardForm sf;
  sf.dim = d;
  sf.M = Eigen::MatrixXd::Zero(mi + me, nv);
  sf.r = Eigen::VectorXd::Zero(mi + me);
  sf.c = Eigen::VectorXd::Zero(nv);
  sf.c.head(d) = obj;
  sf.c.segment(d, d) = -obj;
  for (int i = 0; i < mi; ++i) {
    sf.M.row(i).head(d) = p.A.row(i);
    sf.M.row(i).segment(d, d) = -p.A.row(i);
    sf.M(i, 2 * d + i) = 1.0;
    sf.r(i) = p.b(i);
  }
  for (int i = 0; i < me; ++i) {
    sf.M.row(mi + i).head(d) = p.Aeq.row(i);
    sf.M.row(mi + i).segment(d, d) = -p.Aeq.row(i);
    sf.r(mi + i) = p.beq(i);
  }
  for (int i = 0; i < sf.r.size(); ++i)
    if (sf.r(i) < 0.0) {
      sf.M.row(i) = -sf.M.row(i);
      sf.r(i) = -sf.r(i);
    }
  return sf;
}

// Phase 1.  Returns false if infeasible; otherwise leaves a feasible basic
// tableau restricted to the structural columns (artificials eliminated,
// redundant rows dropped).
bool phase_one(StandardForm& sf, Tableau& t) {
  const int m = static_cast<int>(sf.M.rows());
  const int nv = static_cast<int>(sf.M.cols());
  t.T.resize(m, nv + m + 1);
  t.T.leftCols(nv) = sf.M;
  t.T.middleCols(nv, m) = Eigen::MatrixXd::Identity(m, m);
  t.T.col(nv + m) = sf.r;
  t.cost = Eigen::RowVectorXd::Zero(nv + m + 1);
  t.cost.segment(nv, m).setOnes();
  t.basis.resize(m);
  for (int i = 0; i < m; ++i) {
    t.basis[i] = nv + i;
    t.cost -= t.T.row(i);  // price out the artificial basis
  }
  if (!t.optimize(nv + m))
    throw std::runtime_error("simplex: phase one unbounded");
  const double art = -t.cost(nv + m);
  if (art > 1e-7) return false;

  // Drive remaining artificials out of the basis; drop dependent rows.
  std::vector<int> keep;
  for (int r = 0; r < t.rows(); ++r) {
    if (t.basis[r] < nv) {
      keep.push_back(r);
      continue;
    }
    int c = -1;
    for (int j = 0; j < nv; ++j)
      if (std::abs(t.T(r, j)) > 1e-8) {
        c = j;
        break;
      }
    if (c >= 0) {
      t.pivot(r, c);
      keep.push_back(r);
    }
    // else: redundant constraint, row dropped below
  }
  if (static_cast<int>(keep.size()) < t.rows()) {
    Eigen::MatrixXd T2(keep.size(), t.T.cols());
    std::vector<int> b2;
    for (size_t i = 0; i < keep.size(); ++i) {
      T2.row(i) = t.T.row(keep[i]);
      b2.push_back(t.basis[keep[i]]);
    }
    t.T = std::move(T2);
    t.basis = std::move(b2);
  }

  // Strip artificial columns.
  Eigen::MatrixXd T3(t.rows(), nv + 1);
  T3.leftCols(nv) = t.T.leftCols(nv);
  T3.col(nv) = t.T.col(nv + m);
  t.T = std::move(T3);
  return true;
}

Eigen::VectorXd extract_solution(const Tableau& t, int dim) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(t.cols());
  for (int r = 0; r < t.rows(); ++r) v(t.basis[r]) = t.T(r, t.cols());
  return v.head(dim) - v.segment(dim, dim);
}

}  // namespace

LpResult solve_lp(const Eigen::VectorXd& c, const Polytope& target) {
  if (c.size() != target.dim())
    throw std::invalid_argument("solve_lp: objective/polytope size mismatch");
  StandardForm sf = to_standard_form(c, target);
  Tableau t;
  LpResult res;
  if (!phase_one(sf, t)) {
    res.status = LpStatus::infeasible;
    return res;
  }
  const int nv = static_cast<int>(sf.M.cols());
  t.cost = Eigen::RowVectorXd::Zero(nv + 1);
  t.cost.head(nv) = sf.c.transpose();
  for (int r = 0; r < t.rows(); ++r)
    if (std::abs(t.cost(t.basis[r])) > 0.0)
      t.cost -= t.cost(t.basis[r]) * t.T.row(r);
  if (!t.optimize(nv)) {
    res.status = LpStatus::unbounded;
    res.x = extract_solution(t, target.dim());
    return res;
  }
  res.status = LpStatus::optimal;
  res.x = extract_solution(t, target.dim());
  res.value = c.dot(res.x);
  return res;
}

bool is_feasible(const Polytope& target) {
  StandardForm sf =
      to_standard_form(Eigen::VectorXd::Zero(target.dim()), target);
  Tableau t;
  return phase_one(sf, t);
}

bool is_bounded(const Polytope& target) {
  const int d = target.dim();
  // Recession cone capped to the unit box; nontrivial iff some coordinate
  // can be pushed away from zero.
  Eigen::MatrixXd A(target.A.rows() + 2 * d, d);
  Eigen::VectorXd b(A.rows());
  A << target.A, Eigen::MatrixXd::Identity(d, d),
      -Eigen::MatrixXd::Identity(d, d);
  b << Eigen::VectorXd::Zero(target.A.rows()), Eigen::VectorXd::Ones(2 * d);
  Polytope cone(std::move(A), std::move(b), target.Aeq,
                Eigen::VectorXd::Zero(target.Aeq.rows()));
  for (int i = 0; i < d; ++i) {
    for (double s : {1.0, -1.0}) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
      c(i) = -s;
      const LpResult r = solve_lp(c, cone);
      if (r.status != LpStatus::optimal)
        throw std::runtime_error("is_bounded: recession LP failed");
      if (-r.value > 1e-7) return false;
    }
  }
  return true;
}

bool has_interior_point(const Polytope& target, double margin) {
  const int d = target.dim();
  const int mi = target.inequality_rows();
  if (mi == 0) return is_feasible(target);
  // max t  s.t.  A x + 1 t <= b, Aeq x = beq, t <= 1.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(mi + 1, d + 1);
  A.topLeftCorner(mi, d) = target.A;
  A.col(d).head(mi).setOnes();
  A(mi, d) = 1.0;
  Eigen::VectorXd b(mi + 1);
  b << target.b, 1.0;
  Eigen::MatrixXd Aeq = Eigen::MatrixXd::Zero(target.Aeq.rows(), d + 1);
  Aeq.leftCols(d) = target.Aeq;
  Polytope lifted(std::move(A), std::move(b), std::move(Aeq), target.beq);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d + 1);
  c(d) = -1.0;
  const LpResult r = solve_lp(c, lifted);
  return r.status == LpStatus::optimal && -r.value >= margin;
}

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

namespace {

// Extract per-coordinate bounds if every inequality row touches exactly one
// coordinate; returns false otherwise.
bool box_bounds(const Polytope& p, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
  const int d = p.dim();
  lo = Eigen::VectorXd::Constant(d, -std::numeric_limits<double>::infinity());
  hi = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity());
  for (int r = 0; r < p.inequality_rows(); ++r) {
    int idx = -1;
    for (int j = 0; j < d; ++j) {
      if (p.A(r, j) != 0.0) {
        if (idx >= 0) return false;
        idx = j;
      }
    }
    if (idx < 0) {
      if (p.b(r) < 0.0) return false;  // 0 <= b infeasible row: not a box
      continue;
    }
    const double a = p.A(r, idx), bound = p.b(r) / a;
    if (a > 0.0)
      hi(idx) = std::min(hi(idx), bound);
    else
      lo(idx) = std::max(lo(idx), bound);
  }
  return true;
}

// Projector onto { Aeq x = beq } with cached factorization.
struct AffineProjector {
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;

  AffineProjector(const Eigen::MatrixXd& A, const Eigen::VectorXd& b)
      : Aeq(A), beq(b) {
    cod.compute(Aeq * Aeq.transpose());
  }

  Eigen::VectorXd operator()(const Eigen::VectorXd& v) const {
    return v - Aeq.transpose() * cod.solve(Aeq * v - beq);
  }
};

}  // namespace

Eigen::VectorXd project_polytope(const Polytope& target,
                                 const Eigen::VectorXd& point,
                                 double tolerance) {
  if (point.size() != target.dim())
    throw std::invalid_argument("project_polytope: point/target size mismatch");
  const int mi = target.inequality_rows(), me = target.equality_rows();
  if (mi == 0 && me == 0) return point;

  // Pure affine set: one least-squares step.
  if (mi == 0) {
    AffineProjector proj(target.Aeq, target.beq);
    Eigen::VectorXd x = proj(point);
    const double resid = (target.Aeq * x - target.beq).cwiseAbs().maxCoeff();
    if (resid > 1e-7 * (1.0 + target.beq.cwiseAbs().maxCoeff()))
      throw ProjectionError("project_polytope: inconsistent equality system",
                            x, resid);
    return x;
  }

  // Box-like inequality systems project componentwise.
  {
    Eigen::VectorXd lo, hi;
    if (me == 0 && box_bounds(target, lo, hi)) {
      if ((lo.array() > hi.array()).any())
        throw ProjectionError("project_polytope: empty box", point,
                              (lo - hi).maxCoeff());
      return point.cwiseMax(lo).cwiseMin(hi);
    }
  }

  // General case: Dykstra over the halfspace rows plus the affine block.
  // Row norms are fixed, precompute them.
  Eigen::VectorXd row_sq(mi);
  for (int r = 0; r < mi; ++r) row_sq(r) = target.A.row(r).squaredNorm();
  std::unique_ptr<AffineProjector> affine;
  if (me > 0) affine.reset(new AffineProjector(target.Aeq, target.beq));

  const int nsets = mi + (me > 0 ? 1 : 0);
  std::vector<Eigen::VectorXd> corr(
      nsets, Eigen::VectorXd::Zero(point.size()));
  Eigen::VectorXd x = point;
  const double stop = tolerance / 10.0;
  const long max_sweeps = 100000;
  double sweep_move = std::numeric_limits<double>::infinity();
  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    sweep_move = 0.0;
    for (int s = 0; s < nsets; ++s) {
      const Eigen::VectorXd u = x + corr[s];
      Eigen::VectorXd y;
      if (s < mi) {
        const double g = target.A.row(s).dot(u) - target.b(s);
        y = g > 0.0 ? (u - (g / row_sq(s)) * target.A.row(s).transpose())
                    : u;
      } else {
        y = (*affine)(u);
      }
      corr[s] = u - y;
      sweep_move = std::max(sweep_move, (y - x).cwiseAbs().maxCoeff());
      x = std::move(y);
    }
    // Every candidate agrees: x lies in each set up to the tolerance, and
    // the cycle is stationary.  (Stopping on the outer-iterate change alone
    // is unsafe: the cycle can emit an unchanged-but-infeasible point for
    // many sweeps while the corrections grow.)
    if (sweep_move < stop) return x;
  }
  throw ProjectionError(
      "project_polytope: no convergence within the sweep cap (empty or "
      "degenerate target?)",
      x, sweep_move);
}

namespace {

// Candidate for one active set: least-distance point with rows S forced
// active, or nothing if the KKT system is inconsistent.
bool candidate_projection(const Polytope& p, const Eigen::VectorXd& v,
                          const std::vector<int>& active,
                          Eigen::VectorXd& out) {
  const int me = p.equality_rows();
  const int rows = me + static_cast<int>(active.size());
  if (rows == 0) {
    out = v;
    return true;
  }
  Eigen::MatrixXd M(rows, p.dim());
  Eigen::VectorXd r(rows);
  if (me > 0) {
    M.topRows(me) = p.Aeq;
    r.head(me) = p.beq;
  }
  for (size_t k = 0; k < active.size(); ++k) {
    M.row(me + k) = p.A.row(active[k]);
    r(me + k) = p.b(active[k]);
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(
      M * M.transpose());
  out = v - M.transpose() * cod.solve(M * v - r);
  // Near-singular systems can emit garbage; insist the active rows really
  // hold before admitting the candidate.
  return (M * out - r).cwiseAbs().maxCoeff() <= 1e-9;
}

}  // namespace

Eigen::VectorXd project_polytope_small(const Polytope& target,
                                       const Eigen::VectorXd& point) {
  if (point.size() != target.dim())
    throw std::invalid_argument(
        "project_polytope_small: point/target size mismatch");
  const int mi = target.inequality_rows();
  const int max_active = std::max(0, target.dim() - target.equality_rows());

  // Subset count sum_{k<=max_active} C(mi, k) must stay desk scale.
  double count = 0.0, binom = 1.0;
  for (int k = 0; k <= std::min(max_active, mi); ++k) {
    count += binom;
    binom *= static_cast<double>(mi - k) / static_cast<double>(k + 1);
    if (count > 2e5)
      throw std::invalid_argument(
          "project_polytope_small: too many candidate active sets");
  }

  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  std::vector<int> subset;
  // Depth-first over subsets of inequality rows, sizes 0..max_active.
  std::function<void(int)> visit = [&](int start) {
    Eigen::VectorXd x;
    if (candidate_projection(target, point, subset, x) &&
        target.violation(x) <= 1e-9) {
      const double dist = (x - point).squaredNorm();
      if (dist < best) {
        best = dist;
        best_x = x;
      }
    }
    if (static_cast<int>(subset.size()) >= max_active) return;
    for (int r = start; r < mi; ++r) {
      subset.push_back(r);
      visit(r + 1);
      subset.pop_back();
    }
  };
  visit(0);
  if (!best_x.size())
    throw ProjectionError("project_polytope_small: no feasible candidate",
                          point, std::numeric_limits<double>::infinity());
  return best_x;
}

// ---------------------------------------------------------------------------
// Vertex enumeration
// ---------------------------------------------------------------------------

std::vector<Eigen::VectorXd> enumerate_vertices(const Polytope& target,
                                                double dedupe_tol) {
  const int d = target.dim();
  const int m = target.inequality_rows() + target.equality_rows();
  if (d > 6 || m > 16)
    throw std::invalid_argument(
        "enumerate_vertices: supported up to dimension 6 and 16 rows, got "
        "dimension " +
        std::to_string(d) + " with " + std::to_string(m) + " rows");
  if (d == 0) return {Eigen::VectorXd(0)};
  if (m < d) return {};

  Eigen::MatrixXd M(m, d);
  Eigen::VectorXd rhs(m);
  if (target.inequality_rows() > 0) {
    M.topRows(target.inequality_rows()) = target.A;
    rhs.head(target.inequality_rows()) = target.b;
  }
  if (target.equality_rows() > 0) {
    M.bottomRows(target.equality_rows()) = target.Aeq;
    rhs.tail(target.equality_rows()) = target.beq;
  }

  std::vector<Eigen::VectorXd> verts;
  std::vector<int> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  const double feas_tol = 1e-9;
  while (true) {
    Eigen::MatrixXd Ms(d, d);
    Eigen::VectorXd bs(d);
    for (int r = 0; r < d; ++r) {
      Ms.row(r) = M.row(idx[r]);
      bs(r) = rhs(idx[r]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Ms);
    if (lu.isInvertible()) {
      const Eigen::VectorXd x = lu.solve(bs);
      if (target.violation(x) <= feas_tol) {
        bool dup = false;
        for (const auto& v : verts)
          if ((v - x).cwiseAbs().maxCoeff() <= dedupe_tol) {
            dup = true;
            break;
          }
        if (!dup) verts.push_back(x);
      }
    }
    // next d-combination of {0..m-1}
    int i = d - 1;
    while (i >= 0 && idx[i] == m - d + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < d; ++j) idx[j] = idx[j - 1] + 1;
  }
  std::sort(verts.begin(), verts.end(),
            [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
              for (int i = 0; i < a.size(); ++i) {
                if (a(i) < b(i) - 1e-12) return true;
                if (a(i) > b(i) + 1e-12) return false;
              }
              return false;
            });
  return verts;
}

WorstCase worst_case_value(const UncertainConstraint& c,
                           const UncertaintySets& u, const Eigen::VectorXd& x) {
  const int N = static_cast<int>(c.a0.size());
  if (static_cast<int>(u.local.size()) != N)
    throw std::invalid_argument(
        "worst_case_value: one local uncertainty set per agent required");
  WorstCase wc;
  wc.lhs_argmax.resize(N);
  int off = 0;
  for (int i = 0; i < N; ++i) {
    const int ni = static_cast<int>(c.a0[i].size());
    if (off + ni > x.size())
      throw std::invalid_argument("worst_case_value: point too short");
    const Eigen::VectorXd xi = x.segment(off, ni);
    off += ni;
    double best = 0.0;
    Eigen::VectorXd arg(u.local[i].dim());
    arg.setZero();
    if (u.local[i].dim() > 0) {
      const Eigen::VectorXd w = c.P[i].transpose() * xi;  // maximize w'delta
      const auto verts = enumerate_vertices(u.local[i]);
      if (verts.empty())
        throw std::invalid_argument(
            "worst_case_value: local uncertainty set has no vertices");
      best = -std::numeric_limits<double>::infinity();
      for (const auto& v : verts) {
        const double val = w.dot(v);
        if (val > best) {
          best = val;
          arg = v;
        }
      }
    }
    wc.lhs_max += c.a0[i].dot(xi) + best;
    wc.lhs_argmax[i] = arg;
  }
  if (off != x.size())
    throw std::invalid_argument("worst_case_value: point length mismatch");

  double qmin = 0.0;
  wc.rhs_argmin.resize(u.global.dim());
  wc.rhs_argmin.setZero();
  if (u.global.dim() > 0) {
    const auto verts = enumerate_vertices(u.global);
    if (verts.empty())
      throw std::invalid_argument(
          "worst_case_value: shared uncertainty set has no vertices");
    qmin = std::numeric_limits<double>::infinity();
    for (const auto& v : verts) {
      const double val = c.q.dot(v);
      if (val < qmin) {
        qmin = val;
        wc.rhs_argmin = v;
      }
    }
  }
  wc.rhs_min = c.b0 + qmin;
  return wc;
}

}  // namespace rgnep
