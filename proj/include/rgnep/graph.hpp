#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace rgnep {

/// Undirected, connected communication graph over N agents with its
/// combinatorial Laplacian L = deg - adj and cached spectral norm kappa.
struct CommGraph {
  int N = 0;
  std::vector<std::pair<int, int>> edges;      ///< i < j, deduplicated
  std::vector<std::vector<int>> neighbors;     ///< sorted adjacency lists
  Eigen::MatrixXd L;                           ///< N x N, integer entries
  double kappa = 0.0;                          ///< ||L||_2

  int degree(int i) const { return static_cast<int>(neighbors[i].size()); }
  bool adjacent(int i, int j) const;
};

/// Build a graph from an explicit edge list.  Throws std::invalid_argument on
/// self-loops, out-of-range endpoints, or a disconnected result.
CommGraph make_graph(int N, std::vector<std::pair<int, int>> edges);

/// Named topologies: "ring", "complete", "star" (center 0), "path".
CommGraph make_topology(const std::string& kind, int N);

/// L (x) I_blocksize, the Laplacian acting on stacked per-agent blocks.
Eigen::MatrixXd kron_laplacian(const CommGraph& g, int blocksize);

}  // namespace rgnep
