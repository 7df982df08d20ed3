#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "rgnep/geometry.hpp"
#include "rgnep/model.hpp"

using namespace rgnep;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

bool contains_vertex(const std::vector<Eigen::VectorXd>& vs,
                     const Eigen::VectorXd& v, double tol = 1e-9) {
  return std::any_of(vs.begin(), vs.end(), [&](const Eigen::VectorXd& u) {
    return (u - v).lpNorm<Eigen::Infinity>() <= tol;
  });
}

}  // namespace

TEST_CASE("box projection clamps componentwise") {
  const Polytope box =
      Polytope::box(vec2(-5.0, -5.0), vec2(15.0, 15.0));
  CHECK((project_polytope(box, vec2(20.0, -7.0)) - vec2(15.0, -5.0))
            .norm() == doctest::Approx(0.0).epsilon(1e-12));
  // An interior point is untouched.
  CHECK((project_polytope(box, vec2(3.0, 4.0)) - vec2(3.0, 4.0)).norm() ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("orthant projection") {
  const Polytope orthant = Polytope::nonnegative_orthant(2);
  CHECK((project_polytope(orthant, vec2(-1.0, 2.0)) - vec2(0.0, 2.0))
            .norm() < 1e-12);
}

TEST_CASE("simplex projection agrees with the active-set oracle") {
  Eigen::MatrixXd A(2, 2);
  A << -1.0, 0.0, 0.0, -1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd Ae(1, 2);
  Ae << 1.0, 1.0;
  Eigen::VectorXd be(1);
  be << 1.0;
  const Polytope simplex(A, b, Ae, be);

  const Eigen::VectorXd got = project_polytope(simplex, vec2(1.0, 1.0));
  CHECK((got - vec2(0.5, 0.5)).norm() < 1e-9);
  CHECK((got - oracles::projection_oracle(simplex, vec2(1.0, 1.0))).norm() <
        1e-9);
}

TEST_CASE("projection is idempotent on feasible points") {
  auto gen = oracles::rng(11);
  for (int t = 0; t < 50; ++t) {
    const int dim = 1 + static_cast<int>(gen() % 4);
    const Polytope P = oracles::random_polytope(gen, dim, 6, 0);
    // Exactly feasible points: machine-precision oracle projections.
    const Eigen::VectorXd inside = oracles::projection_oracle(
        P, oracles::random_vector(gen, dim, -3.0, 3.0));
    const Eigen::VectorXd again = project_polytope(P, inside);
    CHECK((again - inside).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("variational optimality against enumerated vertices") {
  // <point - proj, y - proj> <= tol for every vertex y of the target.
  auto gen = oracles::rng(12);
  for (int t = 0; t < 20; ++t) {
    const int dim = 2 + static_cast<int>(gen() % 2);  // 2 or 3
    Polytope P = oracles::random_polytope(gen, dim, 6, 0);
    const Polytope box = Polytope::box(-Eigen::VectorXd::Constant(dim, 2.0),
                                       Eigen::VectorXd::Constant(dim, 2.0));
    // Bound the target so its vertex set describes it completely.
    Eigen::MatrixXd A(P.inequality_rows() + 2 * dim, dim);
    A.topRows(P.inequality_rows()) = P.A;
    A.bottomRows(2 * dim) = box.A;
    Eigen::VectorXd b(A.rows());
    b.head(P.inequality_rows()) = P.b;
    b.tail(2 * dim) = box.b;
    const Polytope bounded(A, b);

    const Eigen::VectorXd point = oracles::random_vector(gen, dim, -4.0, 4.0);
    const Eigen::VectorXd proj = project_polytope(bounded, point);
    for (const auto& y : enumerate_vertices(bounded))
      CHECK((point - proj).dot(y - proj) <= 1e-7);
  }
}

TEST_CASE("iterative and exact projectors match the oracle on a random corpus") {
  auto gen = oracles::rng(20200);
  double worst_iterative = 0.0, worst_exact = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int dim = 1 + static_cast<int>(gen() % 5);
    const int ni = 1 + static_cast<int>(gen() % 8);
    const int ne =
        dim > 1 ? static_cast<int>(gen() % std::min(3u, unsigned(dim))) : 0;
    const Polytope P = oracles::random_polytope(gen, dim, ni, ne);
    const Eigen::VectorXd pt = oracles::random_vector(gen, dim, -3.0, 3.0);
    const Eigen::VectorXd ref = oracles::projection_oracle(P, pt);
    worst_iterative =
        std::max(worst_iterative, (project_polytope(P, pt) - ref).norm());
    worst_exact =
        std::max(worst_exact, (project_polytope_small(P, pt) - ref).norm());
  }
  CHECK(worst_iterative <= 1e-7);
  CHECK(worst_exact <= 1e-9);
}

TEST_CASE("alternating projection does not stall on an affine shift") {
  // Regression: projecting far outside {z >= 0} intersected with
  // {z1 - z2 = -1} once returned an O(1)-wrong point when the sweep stopped
  // on successive-iterate agreement instead of cross-set agreement.
  Eigen::MatrixXd A(2, 2);
  A << -1.0, 0.0, 0.0, -1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd Ae(1, 2);
  Ae << 1.0, -1.0;
  Eigen::VectorXd be(1);
  be << -1.0;
  const Polytope wedge(A, b, Ae, be);

  const Eigen::VectorXd point = vec2(50.0, -30.0);
  const Eigen::VectorXd want = vec2(9.5, 10.5);  // line projection, z >= 0 slack
  CHECK((project_polytope(wedge, point) - want).norm() < 1e-8);
  CHECK((oracles::projection_oracle(wedge, point) - want).norm() < 1e-12);
}

TEST_CASE("exact projector refuses oversized enumerations") {
  auto gen = oracles::rng(77);
  const Polytope big = oracles::random_polytope(gen, 10, 20, 0);
  CHECK_THROWS_AS(project_polytope_small(big, Eigen::VectorXd::Zero(10)),
                  std::invalid_argument);
}

TEST_CASE("vertex enumeration on intervals and a triangle") {
  Eigen::MatrixXd D(2, 1);
  D << 1.0, -1.0;
  Eigen::VectorXd d1(2), d10(2);
  d1 << 1.0, 1.0;
  d10 << 10.0, 10.0;

  const auto unit = enumerate_vertices(Polytope(D, d1));
  REQUIRE(unit.size() == 2);
  CHECK(contains_vertex(unit, Eigen::VectorXd::Constant(1, -1.0)));
  CHECK(contains_vertex(unit, Eigen::VectorXd::Constant(1, 1.0)));

  const auto wide = enumerate_vertices(Polytope(D, d10));
  REQUIRE(wide.size() == 2);
  CHECK(contains_vertex(wide, Eigen::VectorXd::Constant(1, -10.0)));
  CHECK(contains_vertex(wide, Eigen::VectorXd::Constant(1, 10.0)));

  Eigen::MatrixXd T(3, 2);
  T << -1.0, 0.0, 0.0, -1.0, 1.0, 1.0;
  Eigen::VectorXd tb(3);
  tb << 0.0, 0.0, 1.0;
  const auto tri = enumerate_vertices(Polytope(T, tb));
  REQUIRE(tri.size() == 3);
  CHECK(contains_vertex(tri, vec2(0.0, 0.0)));
  CHECK(contains_vertex(tri, vec2(1.0, 0.0)));
  CHECK(contains_vertex(tri, vec2(0.0, 1.0)));
}

TEST_CASE("vertex enumeration rejects over-limit dimensions") {
  auto gen = oracles::rng(5);
  CHECK_THROWS_AS(enumerate_vertices(oracles::random_polytope(gen, 7, 9, 0)),
                  std::invalid_argument);
}

TEST_CASE("worst case of the shipped coupling constraint") {
  const auto s4 = oracles::section4();
  const UncertainConstraint& c = s4.game.coupling.at(0);
  const UncertaintySets& u = s4.game.uncertainty;

  SUBCASE("all-ones strategies") {
    const Eigen::VectorXd x = Eigen::VectorXd::Ones(10);
    const WorstCase wc = worst_case_value(c, u, x);
    // Nominal part sums (1,1)'(1,1) per agent; each local worst case adds
    // |x_i1 + x_i2| = 2; the global part subtracts 10 from the resource 75.
    CHECK(wc.lhs_max == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(wc.rhs_min == doctest::Approx(65.0).epsilon(1e-12));
  }
  SUBCASE("origin") {
    const WorstCase wc =
        worst_case_value(c, u, Eigen::VectorXd::Zero(10));
    CHECK(wc.lhs_max == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(wc.rhs_min == doctest::Approx(65.0).epsilon(1e-12));
  }
  SUBCASE("random points against a closed-form interval oracle") {
    auto gen = oracles::rng(404);
    for (int t = 0; t < 50; ++t) {
      Eigen::VectorXd x(10);
      for (int i = 0; i < 5; ++i)
        x.segment(2 * i, 2) = oracles::random_vector(gen, 2, -5.0, 15.0);
      const WorstCase wc = worst_case_value(c, u, x);
      double lhs = 0.0;
      for (int i = 0; i < 5; ++i) {
        lhs += x[2 * i] + x[2 * i + 1];               // nominal (1,1)'x_i
        lhs += std::abs(x[2 * i] + x[2 * i + 1]);     // delta_i in [-1, 1]
      }
      CHECK(wc.lhs_max == doctest::Approx(lhs).epsilon(1e-12));
      CHECK(wc.rhs_min == doctest::Approx(65.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("worst case without uncertainty is the nominal constraint") {
  UncertainConstraint c;
  c.a0 = {vec2(1.0, 1.0), vec2(2.0, 0.0)};
  c.P = {Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(2, 1)};
  c.b0 = 7.0;
  c.q = Eigen::VectorXd::Zero(1);
  UncertaintySets u;
  Eigen::MatrixXd D(2, 1);
  D << 1.0, -1.0;
  const Eigen::VectorXd d = Eigen::VectorXd::Ones(2);
  u.local = {Polytope(D, d), Polytope(D, d)};
  u.global = Polytope(D, d);

  Eigen::VectorXd x(4);
  x << 3.0, -1.0, 0.5, 9.0;
  const WorstCase wc = worst_case_value(c, u, x);
  CHECK(wc.lhs_max == doctest::Approx(3.0 - 1.0 + 2.0 * 0.5).epsilon(1e-12));
  CHECK(wc.rhs_min == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("linear programming over small polytopes") {
  Eigen::MatrixXd T(3, 2);
  T << -1.0, 0.0, 0.0, -1.0, 1.0, 1.0;
  Eigen::VectorXd tb(3);
  tb << 0.0, 0.0, 1.0;
  const Polytope tri(T, tb);

  SUBCASE("optimum sits at a vertex") {
    const LpResult r = solve_lp(vec2(-1.0, -2.0), tri);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK((r.x - vec2(0.0, 1.0)).norm() < 1e-9);
  }
  SUBCASE("LP optimum matches the best vertex on random objectives") {
    auto gen = oracles::rng(99);
    for (int t = 0; t < 25; ++t) {
      const Eigen::VectorXd c = oracles::random_vector(gen, 2, -2.0, 2.0);
      const LpResult r = solve_lp(c, tri);
      REQUIRE(r.status == LpStatus::optimal);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& v : enumerate_vertices(tri))
        best = std::min(best, c.dot(v));
      CHECK(r.value == doctest::Approx(best).epsilon(1e-9));
    }
  }
  SUBCASE("infeasible and unbounded cases are classified") {
    Eigen::MatrixXd A(2, 1);
    A << 1.0, -1.0;
    Eigen::VectorXd b(2);
    b << -1.0, -1.0;  // x <= -1 and x >= 1
    CHECK_FALSE(is_feasible(Polytope(A, b)));

    Eigen::MatrixXd half(1, 1);
    half << 1.0;
    const Polytope ray(half, Eigen::VectorXd::Ones(1));  // x <= 1
    CHECK(is_feasible(ray));
    CHECK_FALSE(is_bounded(ray));
    const LpResult r = solve_lp(Eigen::VectorXd::Ones(1), ray);
    CHECK(r.status == LpStatus::unbounded);

    CHECK(is_bounded(tri));
  }
  SUBCASE("interiority detection") {
    CHECK(has_interior_point(tri, 1e-6));
    // A single point {x >= 0, x <= 0} has no inequality slack.
    Eigen::MatrixXd A(2, 1);
    A << 1.0, -1.0;
    CHECK_FALSE(has_interior_point(Polytope(A, Eigen::VectorXd::Zero(2)),
                                   1e-9));
  }
}

TEST_CASE("projection reports failure with its last iterate") {
  // An infeasible target can never satisfy the cross-set agreement rule, so
  // the sweep cap trips and the error carries diagnostics.
  Eigen::MatrixXd A(2, 1);
  A << 1.0, -1.0;
  Eigen::VectorXd b(2);
  b << -1.0, -1.0;  // empty: x <= -1, x >= 1
  Eigen::MatrixXd Ae(1, 1);
  Ae << 1.0;
  Eigen::VectorXd be(1);
  be << 5.0;  // force the general (non-box) path
  const Polytope empty_set(A, b, Ae, be);
  try {
    project_polytope(empty_set, Eigen::VectorXd::Zero(1));
    FAIL("expected ProjectionError");
  } catch (const ProjectionError& e) {
    CHECK(e.last_iterate.size() == 1);
    CHECK(e.residual > 0.0);
  }
}
