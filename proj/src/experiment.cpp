#include "rgnep/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "rgnep/geometry.hpp"
#include "rgnep/graph.hpp"

namespace rgnep {

namespace {

std::vector<std::string> modes_of(const std::string& mode) {
  if (mode == "both") return {"ripfbf", "tseng"};
  return {mode};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const RunOptions& opts) {
  std::vector<std::string> topologies =
      opts.topologies.empty() ? std::vector<std::string>{cfg.topology}
                              : opts.topologies;
  std::vector<std::string> modes =
      opts.modes.empty() ? modes_of(cfg.mode) : opts.modes;

  ExperimentResult res;
  bool all_converged = true, all_verified = true;

  for (const auto& topo : topologies) {
    const CommGraph graph = make_topology(topo, cfg.num_agents);
    const UncertainGame game = instantiate_game(cfg, graph);
    const DualizedGame dual = build_extended_game(game);
    const ExtendedGame eg = to_canonical(dual, graph);

    for (const auto& mode : modes) {
      SolverParams params = cfg.solver;
      params.tseng = (mode == "tseng");
      params.keep_history = true;
      RunOutcome out;
      out.topology = topo;
      out.mode = mode;
      out.report = run_distributed(eg, params);

      if (!out.report.converged) {
        all_converged = false;
        out.verdict = "did not converge within the iteration budget";
      } else {
        out.feasibility =
            check_robust_feasibility(game, out.report.x, 1e-6);
        out.consensus = consensus_gaps(eg, out.report.final_point);
        out.lambda_avg = Eigen::VectorXd::Zero(eg.c_in);
        out.z_avg = Eigen::VectorXd::Zero(eg.zeta);
        for (int i = 0; i < eg.num_agents(); ++i) {
          out.lambda_avg +=
              out.report.final_point.lambda.segment(i * eg.c_in, eg.c_in);
          out.z_avg += eg.extract_z(out.report.final_point.w, i);
        }
        out.lambda_avg /= static_cast<double>(eg.num_agents());
        out.z_avg /= static_cast<double>(eg.num_agents());
        const Preconditioner phi = make_preconditioner(eg, params.precond);
        out.kkt = kkt_residual(eg, out.report.final_point, &phi);
        bool br_ok = true;
        if (cfg.verify_best_response) {
          for (int i = 0; i < game.num_agents(); ++i) {
            const double gap = best_response_gap(game, out.report.x, i);
            out.br_gaps.push_back(gap);
            br_ok = br_ok && gap <= 1e-4;
          }
        }
        const bool cons_ok = out.consensus.z <= 1e-5 &&
                             out.consensus.lambda <= 1e-5 &&
                             out.consensus.mu <= 1e-5;
        out.verified = out.feasibility.feasible && cons_ok && br_ok;
        std::ostringstream v;
        v << out.feasibility.summary()
          << "; consensus gaps (z " << out.consensus.z << ", lambda "
          << out.consensus.lambda << ", mu " << out.consensus.mu << ")";
        if (cfg.verify_best_response) {
          const double worst =
              *std::max_element(out.br_gaps.begin(), out.br_gaps.end());
          v << "; max best-response gap " << worst;
        }
        out.verdict = v.str();
        all_verified = all_verified && out.verified;
      }
      res.runs.push_back(std::move(out));
    }
  }

  if (opts.centralized || cfg.centralized_reference) {
    const CommGraph graph = make_topology(cfg.topology, cfg.num_agents);
    const UncertainGame game = instantiate_game(cfg, graph);
    const DualizedGame dual = build_extended_game(game);
    res.centralized = run_centralized(dual);
    res.centralized_x = res.centralized->x;
    if (!res.centralized->converged) all_converged = false;
  }

  res.exit_code = !all_converged ? 3 : (!all_verified ? 2 : 0);
  return res;
}

// ---------------------------------------------------------------------------
// Exporters
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

void write_residuals_csv(const ExperimentResult& result,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iteration,mode,topology,residual,lyapunov,wall_ms\n";
  for (const auto& run : result.runs) {
    const auto& rep = run.report;
    for (int k = 0; k < rep.iterations; ++k) {
      out << (k + 1) << ',' << run.mode << ',' << run.topology << ','
          << fmt(rep.residuals[k]) << ',' << fmt(rep.lyapunov[k]) << ','
          << fmt(rep.wall_ms[k]) << '\n';
    }
  }
}

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

void write_equilibrium_json(const ExperimentResult& result,
                            const ExperimentConfig& cfg,
                            const std::string& path) {
  nlohmann::json j;
  j["runs"] = nlohmann::json::array();
  for (const auto& run : result.runs) {
    nlohmann::json r;
    r["topology"] = run.topology;
    r["mode"] = run.mode;
    r["converged"] = run.report.converged;
    r["iterations"] = run.report.iterations;
    r["residual"] = run.report.residuals.empty()
                        ? 0.0
                        : run.report.residuals.back();
    nlohmann::json xs = nlohmann::json::array();
    for (int i = 0; i < cfg.num_agents; ++i)
      xs.push_back(vec_json(
          run.report.x.segment(i * cfg.agent_dim, cfg.agent_dim)));
    r["x"] = xs;
    r["verified"] = run.verified;
    r["verdict"] = run.verdict;
    if (run.report.converged) {
      r["lambda"] = vec_json(run.lambda_avg);
      r["z"] = vec_json(run.z_avg);
      r["consensus"] = {{"z", run.consensus.z},
                        {"lambda", run.consensus.lambda},
                        {"mu", run.consensus.mu}};
      r["feasibility"] = {{"feasible", run.feasibility.feasible},
                          {"min_slack", run.feasibility.min_slack}};
      if (!run.br_gaps.empty()) r["best_response_gaps"] = run.br_gaps;
      r["kkt"] = {{"stationarity", run.kkt.stationarity},
                  {"complementarity", run.kkt.complementarity},
                  {"primal", run.kkt.primal},
                  {"aggregate", run.kkt.aggregate()}};
    }
    j["runs"].push_back(std::move(r));
  }
  if (result.centralized) {
    nlohmann::json c;
    c["converged"] = result.centralized->converged;
    c["iterations"] = result.centralized->iterations;
    c["residual"] = result.centralized->residual;
    nlohmann::json xs = nlohmann::json::array();
    for (int i = 0; i < cfg.num_agents; ++i)
      xs.push_back(vec_json(
          result.centralized_x.segment(i * cfg.agent_dim, cfg.agent_dim)));
    c["x"] = xs;
    c["z"] = vec_json(result.centralized->z);
    c["lambda"] = vec_json(result.centralized->lambda);
    j["centralized"] = std::move(c);
  }
  // Echo the exact inputs so the result file is self-describing.
  if (!cfg.raw_text.empty()) j["config"] = nlohmann::json::parse(cfg.raw_text);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

// Minimal SVG plotting ------------------------------------------------------

struct SvgCanvas {
  std::ostringstream body;
  double width, height;

  SvgCanvas(double w, double h) : width(w), height(h) {}

  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke, double sw, bool dashed = false) {
    body << "  <line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2
         << "\" y2=\"" << y2 << "\" stroke=\"" << stroke
         << "\" stroke-width=\"" << sw << "\""
         << (dashed ? " stroke-dasharray=\"6 4\"" : "") << " />\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& stroke, double sw, bool dashed = false) {
    body << "  <polyline fill=\"none\" stroke=\"" << stroke
         << "\" stroke-width=\"" << sw << "\""
         << (dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    for (const auto& [x, y] : pts) body << x << ',' << y << ' ';
    body << "\" />\n";
  }

  void circle(double x, double y, double r, const std::string& fill,
              const std::string& stroke = "none") {
    body << "  <circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"" << r
         << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\" />\n";
  }

  void text(double x, double y, const std::string& s, double size = 12,
            const std::string& anchor = "start") {
    body << "  <text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
         << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">"
         << s << "</text>\n";
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
        << height << "\">\n"
        << "  <rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\" />\n"
        << body.str() << "</svg>\n";
  }
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

void write_convergence_svg(const ExperimentResult& result,
                           const std::string& path) {
  const double W = 920, H = 560, ml = 80, mr = 200, mt = 40, mb = 60;
  SvgCanvas svg(W, H);

  long max_iter = 1;
  double min_log = 0.0, max_log = -300.0;
  for (const auto& run : result.runs) {
    max_iter = std::max<long>(max_iter, run.report.iterations);
    for (double r : run.report.residuals)
      if (r > 0.0) {
        min_log = std::min(min_log, std::log10(r));
        max_log = std::max(max_log, std::log10(r));
      }
  }
  min_log = std::floor(min_log) - 0.2;
  max_log = std::ceil(max_log) + 0.2;

  auto sx = [&](double it) {
    return ml + (W - ml - mr) * it / static_cast<double>(max_iter);
  };
  auto sy = [&](double lg) {
    return mt + (H - mt - mb) * (max_log - lg) / (max_log - min_log);
  };

  // Axes and decade gridlines.
  svg.line(ml, mt, ml, H - mb, "#000", 1.2);
  svg.line(ml, H - mb, W - mr, H - mb, "#000", 1.2);
  for (int d = static_cast<int>(std::ceil(min_log));
       d <= static_cast<int>(std::floor(max_log)); ++d) {
    const double y = sy(d);
    svg.line(ml, y, W - mr, y, "#ddd", 0.6);
    svg.text(ml - 8, y + 4, "1e" + std::to_string(d), 11, "end");
  }
  const long xstep = std::max<long>(1, max_iter / 8);
  for (long it = 0; it <= max_iter; it += xstep) {
    const double x = sx(static_cast<double>(it));
    svg.line(x, H - mb, x, H - mb + 5, "#000", 1.0);
    svg.text(x, H - mb + 20, std::to_string(it), 11, "middle");
  }
  svg.text(ml + (W - ml - mr) / 2, H - 12, "iteration", 13, "middle");
  svg.text(18, mt - 14, "natural residual", 13);

  int ci = 0;
  double ly = mt + 10;
  for (const auto& run : result.runs) {
    const std::string color = kPalette[ci % 8];
    const bool dashed = run.mode == "tseng";
    std::vector<std::pair<double, double>> pts;
    pts.reserve(run.report.residuals.size());
    // Thin long series so the file stays light without changing the shape.
    const size_t n = run.report.residuals.size();
    const size_t stride = std::max<size_t>(1, n / 2000);
    for (size_t k = 0; k < n; k += stride) {
      const double r = run.report.residuals[k];
      if (r > 0.0) pts.push_back({sx(static_cast<double>(k + 1)),
                                  sy(std::log10(r))});
    }
    if (n > 0 && run.report.residuals.back() > 0.0)
      pts.push_back({sx(static_cast<double>(n)),
                     sy(std::log10(run.report.residuals.back()))});
    svg.polyline(pts, color, 1.5, dashed);
    svg.line(W - mr + 14, ly - 4, W - mr + 44, ly - 4, color, 2.0, dashed);
    svg.text(W - mr + 50, ly, run.topology + " / " + run.mode, 12);
    ly += 20;
    ++ci;
  }
  svg.save(path);
}

void write_trajectories_svg(const ExperimentResult& result,
                            const ExperimentConfig& cfg,
                            const std::string& path) {
  const double W = 720, H = 620, ml = 70, mr = 40, mt = 40, mb = 60;
  SvgCanvas svg(W, H);

  // Pick the run to draw: the configured topology's first mode if present.
  const RunOutcome* chosen = nullptr;
  for (const auto& run : result.runs)
    if (run.topology == cfg.topology && !run.report.x_history.empty()) {
      chosen = &run;
      break;
    }
  if (chosen == nullptr && !result.runs.empty() &&
      !result.runs.front().report.x_history.empty())
    chosen = &result.runs.front();

  const int d = cfg.agent_dim;
  const int N = cfg.num_agents;
  const bool planar = d >= 2;

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto account = [&](double a, double b) {
    xmin = std::min(xmin, a);
    xmax = std::max(xmax, a);
    ymin = std::min(ymin, b);
    ymax = std::max(ymax, b);
  };
  if (chosen)
    for (const auto& x : chosen->report.x_history)
      for (int i = 0; i < N; ++i)
        account(x(i * d), planar ? x(i * d + 1) : 0.0);
  if (result.centralized_x.size() > 0)
    for (int i = 0; i < N; ++i)
      account(result.centralized_x(i * d),
              planar ? result.centralized_x(i * d + 1) : 0.0);
  if (xmin > xmax) {
    xmin = ymin = -1;
    xmax = ymax = 1;
  }
  const double padx = 0.06 * (xmax - xmin + 1e-12);
  const double pady = 0.06 * (ymax - ymin + 1e-12);
  xmin -= padx;
  xmax += padx;
  ymin -= pady;
  ymax += pady;

  auto sx = [&](double v) { return ml + (W - ml - mr) * (v - xmin) / (xmax - xmin); };
  auto sy = [&](double v) { return mt + (H - mt - mb) * (ymax - v) / (ymax - ymin); };

  svg.line(ml, mt, ml, H - mb, "#000", 1.2);
  svg.line(ml, H - mb, W - mr, H - mb, "#000", 1.2);
  for (int t = 0; t <= 4; ++t) {
    const double vx = xmin + (xmax - xmin) * t / 4.0;
    const double vy = ymin + (ymax - ymin) * t / 4.0;
    std::ostringstream lx, lyv;
    lx << std::setprecision(3) << vx;
    lyv << std::setprecision(3) << vy;
    svg.text(sx(vx), H - mb + 20, lx.str(), 11, "middle");
    svg.text(ml - 8, sy(vy) + 4, lyv.str(), 11, "end");
  }
  svg.text(ml + (W - ml - mr) / 2, H - 12,
           "strategy coordinate 1", 13, "middle");
  svg.text(18, mt - 14, "strategy coordinate 2", 13);

  if (chosen) {
    for (int i = 0; i < N; ++i) {
      const std::string color = kPalette[i % 8];
      std::vector<std::pair<double, double>> pts;
      const auto& hist = chosen->report.x_history;
      const size_t stride = std::max<size_t>(1, hist.size() / 4000);
      for (size_t k = 0; k < hist.size(); k += stride)
        pts.push_back({sx(hist[k](i * d)),
                       sy(planar ? hist[k](i * d + 1) : 0.0)});
      pts.push_back({sx(hist.back()(i * d)),
                     sy(planar ? hist.back()(i * d + 1) : 0.0)});
      svg.polyline(pts, color, 1.4);
      svg.circle(pts.front().first, pts.front().second, 3.5, "white", color);
      svg.circle(pts.back().first, pts.back().second, 4.0, color);
      svg.text(pts.back().first + 8, pts.back().second - 6,
               "agent " + std::to_string(i + 1), 11);
    }
  }

  // Centralized reference as dashed crosshairs.
  if (result.centralized_x.size() > 0) {
    for (int i = 0; i < N; ++i) {
      const double cx = sx(result.centralized_x(i * d));
      const double cy =
          sy(planar ? result.centralized_x(i * d + 1) : 0.0);
      svg.line(cx - 12, cy, cx + 12, cy, "#333", 1.2, true);
      svg.line(cx, cy - 12, cx, cy + 12, "#333", 1.2, true);
    }
    svg.text(W - mr - 8, mt + 4, "dashed cross: centralized reference", 11,
             "end");
  }
  svg.save(path);
}

}  // namespace

void export_results(const ExperimentResult& result,
                    const ExperimentConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_residuals_csv(result, out_dir + "/residuals.csv");
  write_equilibrium_json(result, cfg, out_dir + "/equilibrium.json");
  write_convergence_svg(result, out_dir + "/convergence.svg");
  write_trajectories_svg(result, cfg, out_dir + "/trajectories.svg");
}

}  // namespace rgnep
