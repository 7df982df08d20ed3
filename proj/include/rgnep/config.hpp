#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rgnep/model.hpp"
#include "rgnep/solver.hpp"

namespace rgnep {

/// Configuration problem with the JSON-pointer of the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, const std::string& message)
      : std::runtime_error("config error at " + pointer + ": " + message),
        pointer(std::move(pointer)) {}

  std::string pointer;
};

/// Cost families the config file can describe.
///   quadratic:        explicit Q_i, cross blocks, linear terms
///   neighbor_average: J_i = 1/2|x_i|^2 + (1/deg_i) sum_{j~i} x_i'x_j - a_i'x_i,
///                     cross terms following the communication graph
struct CostSpec {
  std::string kind = "neighbor_average";
  std::vector<double> alpha_scale;            ///< neighbor_average: a_i = s_i * 1
  std::vector<Eigen::MatrixXd> Q;             ///< quadratic
  std::vector<std::vector<std::pair<int, Eigen::MatrixXd>>> cross;
  std::vector<Eigen::VectorXd> linear;
};

struct ExperimentConfig {
  int num_agents = 0;
  int agent_dim = 0;
  CostSpec cost;
  Eigen::VectorXd box_lo, box_hi;  ///< Omega_i = [lo, hi] for every agent
  std::vector<UncertainConstraint> coupling;
  UncertaintySets uncertainty;

  std::string topology = "ring";
  std::vector<std::string> sweep_topologies;  ///< used by --sweep

  std::string mode = "ripfbf";  ///< ripfbf | tseng | both
  SolverParams solver;
  bool centralized_reference = false;
  bool verify_best_response = true;
  std::string out_dir = "out";

  /// The JSON text this config was parsed from, echoed into equilibrium.json
  /// so every result file names the exact inputs that produced it.
  std::string raw_text;
};

/// Parse and validate a JSON experiment description.  Missing solver fields
/// default to sigma_bar = 0.5, tolerance = 1e-6, max_iterations = 50000.
/// Every rejection names the offending field by JSON pointer.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

/// Instantiate the game on a concrete graph (the neighbor_average cost reads
/// its coupling pattern off the graph, so the game is topology-dependent).
UncertainGame instantiate_game(const ExperimentConfig& cfg,
                               const CommGraph& graph);

}  // namespace rgnep
