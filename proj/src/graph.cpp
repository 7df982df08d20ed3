#include "rgnep/graph.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <queue>
#include <set>
#include <stdexcept>

namespace rgnep {

bool CommGraph::adjacent(int i, int j) const {
  return std::binary_search(neighbors[i].begin(), neighbors[i].end(), j);
}

CommGraph make_graph(int N, std::vector<std::pair<int, int>> edges) {
  if (N < 1) throw std::invalid_argument("graph: need at least one agent");
  std::set<std::pair<int, int>> uniq;
  for (auto [i, j] : edges) {
    if (i == j)
      throw std::invalid_argument("graph: self-loop at " + std::to_string(i));
    if (i < 0 || j < 0 || i >= N || j >= N)
      throw std::invalid_argument("graph: edge endpoint out of range");
    uniq.insert({std::min(i, j), std::max(i, j)});
  }

  CommGraph g;
  g.N = N;
  g.edges.assign(uniq.begin(), uniq.end());
  g.neighbors.assign(N, {});
  for (auto [i, j] : g.edges) {
    g.neighbors[i].push_back(j);
    g.neighbors[j].push_back(i);
  }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());

  // Connectivity (trivially true for N = 1).
  std::vector<bool> seen(N, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int reached = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int u : g.neighbors[v])
      if (!seen[u]) {
        seen[u] = true;
        ++reached;
        q.push(u);
      }
  }
  if (reached != N)
    throw std::invalid_argument("graph: not connected (" +
                                std::to_string(reached) + " of " +
                                std::to_string(N) + " agents reachable)");

  // Integer-exact Laplacian: degrees on the diagonal, -1 per edge.
  g.L = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) g.L(i, i) = static_cast<double>(g.degree(i));
  for (auto [i, j] : g.edges) {
    g.L(i, j) = -1.0;
    g.L(j, i) = -1.0;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.L);
  g.kappa = es.eigenvalues().cwiseAbs().maxCoeff();
  return g;
}

CommGraph make_topology(const std::string& kind, int N) {
  std::vector<std::pair<int, int>> edges;
  if (kind == "complete") {
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) edges.push_back({i, j});
  } else if (kind == "ring") {
    if (N < 3)
      throw std::invalid_argument("graph: a ring needs at least 3 agents");
    for (int i = 0; i < N; ++i) edges.push_back({i, (i + 1) % N});
  } else if (kind == "star") {
    if (N < 2)
      throw std::invalid_argument("graph: a star needs at least 2 agents");
    for (int i = 1; i < N; ++i) edges.push_back({0, i});
  } else if (kind == "path") {
    if (N < 2)
      throw std::invalid_argument("graph: a path needs at least 2 agents");
    for (int i = 0; i + 1 < N; ++i) edges.push_back({i, i + 1});
  } else {
    throw std::invalid_argument("graph: unknown topology '" + kind +
                                "' (expected ring|complete|star|path)");
  }
  return make_graph(N, std::move(edges));
}

Eigen::MatrixXd kron_laplacian(const CommGraph& g, int blocksize) {
  if (blocksize < 0) throw std::invalid_argument("kron_laplacian: bad size");
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(g.N * blocksize, g.N * blocksize);
  for (int i = 0; i < g.N; ++i)
    for (int j = 0; j < g.N; ++j)
      if (g.L(i, j) != 0.0)
        K.block(i * blocksize, j * blocksize, blocksize, blocksize) =
            g.L(i, j) * Eigen::MatrixXd::Identity(blocksize, blocksize);
  return K;
}

}  // namespace rgnep
