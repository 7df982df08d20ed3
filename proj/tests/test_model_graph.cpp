#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "oracles.hpp"
#include "rgnep/graph.hpp"
#include "rgnep/model.hpp"

using namespace rgnep;

namespace {

UncertainGame single_agent_identity_cost() {
  UncertainGame g;
  Agent a;
  a.dim = 2;
  QuadraticCost qc;
  qc.Q = Eigen::Matrix2d::Identity();
  qc.linear = Eigen::Vector2d::Zero();
  a.cost = qc;
  a.local_set = Polytope::box(Eigen::Vector2d::Constant(-10.0),
                              Eigen::Vector2d::Constant(10.0));
  g.agents.push_back(a);
  return g;
}

}  // namespace

TEST_CASE("pseudo-gradient of the shipped game") {
  const auto s4 = oracles::section4();

  SUBCASE("at the origin each block is minus its pull term") {
    const Eigen::VectorXd f =
        pseudo_gradient(s4.game, Eigen::VectorXd::Zero(10));
    for (int i = 0; i < 5; ++i) {
      CHECK(f[2 * i] == doctest::Approx(-10.0 * i).epsilon(1e-12));
      CHECK(f[2 * i + 1] == doctest::Approx(-10.0 * i).epsilon(1e-12));
    }
  }
  SUBCASE("at all-ones the ring neighbors contribute one unit") {
    const Eigen::VectorXd f =
        pseudo_gradient(s4.game, Eigen::VectorXd::Ones(10));
    for (int i = 0; i < 5; ++i) {
      const double want = 2.0 - 10.0 * i;  // own + averaged neighbors - pull
      CHECK(f[2 * i] == doctest::Approx(want).epsilon(1e-12));
      CHECK(f[2 * i + 1] == doctest::Approx(want).epsilon(1e-12));
    }
  }
  SUBCASE("matches central finite differences of the cost at random points") {
    auto gen = oracles::rng(31);
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd x(10);
      for (int i = 0; i < 10; ++i)
        x[i] = oracles::random_vector(gen, 1, -5.0, 15.0)[0];
      const Eigen::VectorXd f = pseudo_gradient(s4.game, x);
      for (int i = 0; i < 5; ++i) {
        auto own = [&](const Eigen::VectorXd& xi) {
          Eigen::VectorXd full = x;
          full.segment(2 * i, 2) = xi;
          return cost_eval(s4.game, i, full);
        };
        const Eigen::VectorXd fd = oracles::fd_gradient(own, x.segment(2 * i, 2));
        CHECK((f.segment(2 * i, 2) - fd).lpNorm<Eigen::Infinity>() <=
              1e-6 * std::max(1.0, fd.lpNorm<Eigen::Infinity>()));
      }
    }
  }
  SUBCASE("rejects a wrong-sized point") {
    CHECK_THROWS_AS(pseudo_gradient(s4.game, Eigen::VectorXd::Zero(9)),
                    std::invalid_argument);
  }
}

TEST_CASE("single-agent pseudo-gradient and cost value") {
  const UncertainGame g = single_agent_identity_cost();
  Eigen::VectorXd x(2);
  x << 3.0, 4.0;
  CHECK((pseudo_gradient(g, x) - x).norm() < 1e-14);
  CHECK(cost_eval(g, 0, x) == doctest::Approx(12.5).epsilon(1e-14));
}

TEST_CASE("cost values of the shipped game") {
  const auto s4 = oracles::section4();
  CHECK(cost_eval(s4.game, 0, Eigen::VectorXd::Zero(10)) ==
        doctest::Approx(0.0).epsilon(1e-14));
  // Agent 2 with everyone at (1,1): 1/2*2 + averaged-neighbor term 2 - 20.
  CHECK(cost_eval(s4.game, 1, Eigen::VectorXd::Ones(10)) ==
        doctest::Approx(-17.0).epsilon(1e-12));
}

TEST_CASE("pseudo-gradient monotonicity on sampled pairs") {
  const auto s4 = oracles::section4();
  auto gen = oracles::rng(32);
  for (int t = 0; t < 1000; ++t) {
    Eigen::VectorXd x(10), y(10);
    for (int i = 0; i < 10; ++i) {
      x[i] = oracles::random_vector(gen, 1, -5.0, 15.0)[0];
      y[i] = oracles::random_vector(gen, 1, -5.0, 15.0)[0];
    }
    const double inner =
        (pseudo_gradient(s4.game, x) - pseudo_gradient(s4.game, y)).dot(x - y);
    CHECK(inner >= -1e-10);
  }
}

TEST_CASE("game validation") {
  const auto s4 = oracles::section4();

  SUBCASE("the shipped game passes every check") {
    const ValidationReport rep = validate_game(s4.game);
    CHECK(rep.ok());
    for (const auto& c : rep.checks) CHECK_MESSAGE(c.passed, c.name, ": ", c.detail);
  }
  SUBCASE("validation is pure") {
    CHECK(validate_game(s4.game).summary() == validate_game(s4.game).summary());
  }
  SUBCASE("an unbounded uncertainty set is rejected") {
    UncertainGame bad = s4.game;
    bad.uncertainty.global =
        Polytope(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1));
    const ValidationReport rep = validate_game(bad);
    CHECK_FALSE(rep.ok());
    bool bounded_check_failed = false;
    for (const auto& c : rep.checks)
      if (!c.passed && c.name.find("uncertainty") != std::string::npos &&
          c.detail.find("unbounded") != std::string::npos)
        bounded_check_failed = true;
    CHECK(bounded_check_failed);
  }
  SUBCASE("an impossible resource empties the feasible set") {
    UncertainGame bad = s4.game;
    bad.coupling[0].b0 = -1e6;
    const ValidationReport rep = validate_game(bad);
    CHECK_FALSE(rep.ok());
    bool feasibility_failed = false;
    for (const auto& c : rep.checks)
      if (!c.passed && c.name.find("feasib") != std::string::npos)
        feasibility_failed = true;
    CHECK(feasibility_failed);
  }
  SUBCASE("a non-convex cost is rejected with the agent index") {
    UncertainGame bad = s4.game;
    QuadraticCost qc = std::get<QuadraticCost>(bad.agents[2].cost);
    qc.Q = -Eigen::Matrix2d::Identity();
    bad.agents[2].cost = qc;
    const ValidationReport rep = validate_game(bad);
    CHECK_FALSE(rep.ok());
    bool convexity_failed = false;
    for (const auto& c : rep.checks)
      if (!c.passed && c.detail.find("2") != std::string::npos)
        convexity_failed = true;
    CHECK(convexity_failed);
  }
}

TEST_CASE("named topologies and their spectra") {
  SUBCASE("complete graph on five nodes") {
    const CommGraph g = make_topology("complete", 5);
    CHECK(g.kappa == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(static_cast<int>(g.edges.size()) == 10);
  }
  SUBCASE("ring on five nodes") {
    const CommGraph g = make_topology("ring", 5);
    const double want = 2.0 - 2.0 * std::cos(4.0 * M_PI / 5.0);
    CHECK(g.kappa == doctest::Approx(want).epsilon(1e-12));
    CHECK(g.kappa == doctest::Approx(3.618033988749895).epsilon(1e-12));
    for (int i = 0; i < 5; ++i) CHECK(g.degree(i) == 2);
  }
  SUBCASE("two-node path") {
    const CommGraph g = make_topology("path", 2);
    Eigen::MatrixXd L(2, 2);
    L << 1.0, -1.0, -1.0, 1.0;
    CHECK((g.L - L).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(g.kappa == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("star center has full degree") {
    const CommGraph g = make_topology("star", 5);
    CHECK(g.degree(0) == 4);
    for (int i = 1; i < 5; ++i) CHECK(g.degree(i) == 1);
  }
  SUBCASE("unknown names and tiny sizes are rejected") {
    CHECK_THROWS_AS(make_topology("torus", 5), std::invalid_argument);
    CHECK_THROWS_AS(make_topology("ring", 2), std::invalid_argument);
    CHECK_THROWS_AS(make_topology("path", 1), std::invalid_argument);
  }
}

TEST_CASE("laplacian structure is exact") {
  for (const char* kind : {"ring", "complete", "star", "path"}) {
    const CommGraph g = make_topology(kind, 5);
    // Integer construction: row sums vanish exactly, symmetry is exact.
    CHECK((g.L.rowwise().sum()).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((g.L.colwise().sum()).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((g.L - g.L.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
    for (int i = 0; i < 5; ++i) {
      CHECK(g.L(i, i) == doctest::Approx(g.degree(i)));
      for (int j : g.neighbors[i]) CHECK(g.L(i, j) == -1.0);
    }
  }
}

TEST_CASE("edge-list graphs validate their input") {
  const CommGraph g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 1}});
  CHECK(static_cast<int>(g.edges.size()) == 3);  // duplicate collapsed
  CHECK(g.adjacent(0, 1));
  CHECK_FALSE(g.adjacent(0, 2));

  CHECK_THROWS_AS(make_graph(4, {{0, 1}, {2, 3}}), std::invalid_argument);
  CHECK_THROWS_AS(make_graph(3, {{0, 0}, {0, 1}, {1, 2}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_graph(3, {{0, 1}, {1, 3}}), std::invalid_argument);
}

TEST_CASE("kronecker laplacian blocks") {
  const CommGraph path = make_topology("path", 2);
  const Eigen::MatrixXd K = kron_laplacian(path, 2);
  REQUIRE(K.rows() == 4);
  Eigen::MatrixXd want(4, 4);
  want << 1, 0, -1, 0, 0, 1, 0, -1, -1, 0, 1, 0, 0, -1, 0, 1;
  CHECK((K - want).lpNorm<Eigen::Infinity>() == 0.0);

  const CommGraph ring = make_topology("ring", 5);
  CHECK((kron_laplacian(ring, 1) - ring.L).lpNorm<Eigen::Infinity>() == 0.0);
  for (int bs : {1, 2, 5}) {
    const Eigen::MatrixXd Kb = kron_laplacian(ring, bs);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Kb);
    CHECK(svd.singularValues()[0] ==
          doctest::Approx(ring.kappa).epsilon(1e-12));
  }
}
