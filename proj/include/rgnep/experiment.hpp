#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rgnep/config.hpp"
#include "rgnep/solver.hpp"
#include "rgnep/verify.hpp"

namespace rgnep {

struct RunOutcome {
  std::string topology;
  std::string mode;  ///< "ripfbf" or "tseng"
  RunReport report;
  FeasibilityReport feasibility;
  ConsensusGaps consensus;
  KktResidual kkt;
  std::vector<double> br_gaps;  ///< per agent, empty when skipped
  Eigen::VectorXd lambda_avg;   ///< inequality multiplier, agent average
  Eigen::VectorXd z_avg;        ///< shared dual block, agent average
  bool verified = false;
  std::string verdict;  ///< human-readable verification summary
};

struct ExperimentResult {
  std::vector<RunOutcome> runs;
  std::optional<CentralizedReport> centralized;
  Eigen::VectorXd centralized_x;  ///< empty unless centralized ran
  int exit_code = 0;  ///< 0 ok, 2 verification failed, 3 not converged
};

struct RunOptions {
  std::vector<std::string> topologies;  ///< empty: config topology only
  std::vector<std::string> modes;       ///< empty: config mode
  bool centralized = false;
  std::string out_dir;  ///< empty: config out_dir
};

/// Execute the configured solve (or a sweep), verify every converged run
/// (robust feasibility, consensus, optionally best responses), and collect
/// everything needed for export.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const RunOptions& opts = {});

/// Write residuals.csv, equilibrium.json, convergence.svg, trajectories.svg
/// into out_dir (created if missing).
void export_results(const ExperimentResult& result,
                    const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace rgnep
