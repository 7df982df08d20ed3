#include "rgnep/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "rgnep/graph.hpp"

namespace rgnep {

namespace {

using nlohmann::json;

const json& at(const json& j, const std::string& ptr) {
  const json* cur = &j;
  std::string walked;
  size_t pos = 1;  // ptr starts with '/'
  while (pos <= ptr.size()) {
    const size_t next = ptr.find('/', pos);
    const std::string key =
        ptr.substr(pos, next == std::string::npos ? next : next - pos);
    walked += "/" + key;
    if (cur->is_object()) {
      auto it = cur->find(key);
      if (it == cur->end()) throw ConfigError(walked, "missing field");
      cur = &*it;
    } else if (cur->is_array()) {
      size_t idx = 0;
      try {
        idx = std::stoul(key);
      } catch (...) {
        throw ConfigError(walked, "array index expected");
      }
      if (idx >= cur->size()) throw ConfigError(walked, "index out of range");
      cur = &(*cur)[idx];
    } else {
      throw ConfigError(walked, "not an object or array");
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return *cur;
}

bool has(const json& j, const std::string& ptr) {
  try {
    at(j, ptr);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

double get_number(const json& j, const std::string& ptr) {
  const json& v = at(j, ptr);
  if (!v.is_number()) throw ConfigError(ptr, "number expected");
  return v.get<double>();
}

double get_number_or(const json& j, const std::string& ptr, double dflt) {
  return has(j, ptr) ? get_number(j, ptr) : dflt;
}

int get_int(const json& j, const std::string& ptr) {
  const json& v = at(j, ptr);
  if (!v.is_number_integer()) throw ConfigError(ptr, "integer expected");
  return v.get<int>();
}

int get_int_or(const json& j, const std::string& ptr, int dflt) {
  return has(j, ptr) ? get_int(j, ptr) : dflt;
}

bool get_bool_or(const json& j, const std::string& ptr, bool dflt) {
  if (!has(j, ptr)) return dflt;
  const json& v = at(j, ptr);
  if (!v.is_boolean()) throw ConfigError(ptr, "boolean expected");
  return v.get<bool>();
}

std::string get_string(const json& j, const std::string& ptr) {
  const json& v = at(j, ptr);
  if (!v.is_string()) throw ConfigError(ptr, "string expected");
  return v.get<std::string>();
}

std::string get_string_or(const json& j, const std::string& ptr,
                          const std::string& dflt) {
  return has(j, ptr) ? get_string(j, ptr) : dflt;
}

Eigen::VectorXd get_vector(const json& j, const std::string& ptr) {
  const json& v = at(j, ptr);
  if (!v.is_array()) throw ConfigError(ptr, "array of numbers expected");
  Eigen::VectorXd out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw ConfigError(ptr + "/" + std::to_string(i), "number expected");
    out(i) = v[i].get<double>();
  }
  return out;
}

Eigen::MatrixXd get_matrix(const json& j, const std::string& ptr) {
  const json& v = at(j, ptr);
  if (!v.is_array() || v.empty() || !v[0].is_array())
    throw ConfigError(ptr, "array of rows expected");
  const size_t cols = v[0].size();
  Eigen::MatrixXd out(v.size(), cols);
  for (size_t r = 0; r < v.size(); ++r) {
    if (!v[r].is_array() || v[r].size() != cols)
      throw ConfigError(ptr + "/" + std::to_string(r),
                        "rows must have equal length");
    for (size_t c = 0; c < cols; ++c) {
      if (!v[r][c].is_number())
        throw ConfigError(
            ptr + "/" + std::to_string(r) + "/" + std::to_string(c),
            "number expected");
      out(r, c) = v[r][c].get<double>();
    }
  }
  return out;
}

Polytope get_ineq_polytope(const json& j, const std::string& ptr,
                           int expect_dim) {
  const Eigen::MatrixXd D = get_matrix(j, ptr + "/D");
  const Eigen::VectorXd d = get_vector(j, ptr + "/d");
  if (D.rows() != d.size())
    throw ConfigError(ptr, "D and d must have the same number of rows");
  if (expect_dim > 0 && D.cols() != expect_dim)
    throw ConfigError(ptr + "/D", "expected " + std::to_string(expect_dim) +
                                      " columns");
  return Polytope(D, d);
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.raw_text = json_text;
  cfg.num_agents = get_int(j, "/game/agents");
  if (cfg.num_agents < 2)
    throw ConfigError("/game/agents", "need at least 2 agents");
  cfg.agent_dim = get_int(j, "/game/dim");
  if (cfg.agent_dim < 1)
    throw ConfigError("/game/dim", "strategy dimension must be positive");

  // ---- cost --------------------------------------------------------------
  cfg.cost.kind = get_string_or(j, "/game/cost/kind", "neighbor_average");
  if (cfg.cost.kind == "neighbor_average") {
    const Eigen::VectorXd sc = get_vector(j, "/game/cost/alpha_scale");
    if (sc.size() != cfg.num_agents)
      throw ConfigError("/game/cost/alpha_scale",
                        "need one entry per agent");
    cfg.cost.alpha_scale.assign(sc.data(), sc.data() + sc.size());
  } else if (cfg.cost.kind == "quadratic") {
    cfg.cost.Q.clear();
    cfg.cost.cross.assign(cfg.num_agents, {});
    cfg.cost.linear.clear();
    for (int i = 0; i < cfg.num_agents; ++i) {
      const std::string base = "/game/cost/agents/" + std::to_string(i);
      cfg.cost.Q.push_back(get_matrix(j, base + "/Q"));
      cfg.cost.linear.push_back(get_vector(j, base + "/linear"));
      if (has(j, base + "/cross")) {
        const json& cr = at(j, base + "/cross");
        if (!cr.is_object())
          throw ConfigError(base + "/cross",
                            "object mapping agent index to a matrix expected");
        for (auto it = cr.begin(); it != cr.end(); ++it) {
          int other = 0;
          try {
            other = std::stoi(it.key());
          } catch (...) {
            throw ConfigError(base + "/cross/" + it.key(),
                              "agent index expected");
          }
          if (other < 0 || other >= cfg.num_agents || other == i)
            throw ConfigError(base + "/cross/" + it.key(),
                              "index must name a different agent");
          cfg.cost.cross[i].push_back(
              {other, get_matrix(j, base + "/cross/" + it.key())});
        }
      }
    }
  } else {
    throw ConfigError("/game/cost/kind",
                      "expected neighbor_average or quadratic");
  }

  // ---- local sets ---------------------------------------------------------
  cfg.box_lo = get_vector(j, "/game/box/lo");
  cfg.box_hi = get_vector(j, "/game/box/hi");
  if (cfg.box_lo.size() != cfg.agent_dim || cfg.box_hi.size() != cfg.agent_dim)
    throw ConfigError("/game/box", "lo/hi must have length dim");
  for (int i = 0; i < cfg.agent_dim; ++i)
    if (cfg.box_lo(i) > cfg.box_hi(i))
      throw ConfigError("/game/box", "lo exceeds hi in coordinate " +
                                         std::to_string(i));

  // ---- uncertainty ----------------------------------------------------------
  {
    const json& loc = at(j, "/game/uncertainty/local");
    cfg.uncertainty.local.clear();
    if (loc.is_array()) {
      if (static_cast<int>(loc.size()) != cfg.num_agents)
        throw ConfigError("/game/uncertainty/local",
                          "need one set per agent");
      for (int i = 0; i < cfg.num_agents; ++i)
        cfg.uncertainty.local.push_back(get_ineq_polytope(
            j, "/game/uncertainty/local/" + std::to_string(i), 0));
    } else {
      const Polytope p = get_ineq_polytope(j, "/game/uncertainty/local", 0);
      cfg.uncertainty.local.assign(cfg.num_agents, p);
    }
    cfg.uncertainty.global =
        get_ineq_polytope(j, "/game/uncertainty/global", 0);
  }

  // ---- coupling -------------------------------------------------------------
  {
    const json& cj = at(j, "/game/coupling");
    if (!cj.is_array() || cj.empty())
      throw ConfigError("/game/coupling",
                        "need at least one coupled constraint");
    for (size_t k = 0; k < cj.size(); ++k) {
      const std::string base = "/game/coupling/" + std::to_string(k);
      UncertainConstraint con;
      const json& a0j = at(j, base + "/a0");
      if (a0j.is_array() && !a0j.empty() && a0j[0].is_array()) {
        if (static_cast<int>(a0j.size()) != cfg.num_agents)
          throw ConfigError(base + "/a0", "need one vector per agent");
        for (int i = 0; i < cfg.num_agents; ++i)
          con.a0.push_back(get_vector(j, base + "/a0/" + std::to_string(i)));
      } else {
        const Eigen::VectorXd a0 = get_vector(j, base + "/a0");
        con.a0.assign(cfg.num_agents, a0);
      }
      const json& pj = at(j, base + "/P");
      if (pj.is_array() && !pj.empty() && pj[0].is_array() &&
          !pj[0].empty() && pj[0][0].is_array()) {
        if (static_cast<int>(pj.size()) != cfg.num_agents)
          throw ConfigError(base + "/P", "need one matrix per agent");
        for (int i = 0; i < cfg.num_agents; ++i)
          con.P.push_back(get_matrix(j, base + "/P/" + std::to_string(i)));
      } else {
        const Eigen::MatrixXd P = get_matrix(j, base + "/P");
        con.P.assign(cfg.num_agents, P);
      }
      con.b0 = get_number(j, base + "/b0");
      con.q = get_vector(j, base + "/q");
      for (int i = 0; i < cfg.num_agents; ++i) {
        if (con.a0[i].size() != cfg.agent_dim)
          throw ConfigError(base + "/a0", "vectors must have length dim");
        if (con.P[i].rows() != cfg.agent_dim)
          throw ConfigError(base + "/P",
                            "matrices must have dim rows (one per strategy "
                            "coordinate)");
        if (con.P[i].cols() != cfg.uncertainty.local[i].dim())
          throw ConfigError(
              base + "/P",
              "columns must match the local uncertainty dimension");
      }
      if (con.q.size() != cfg.uncertainty.global.dim())
        throw ConfigError(base + "/q",
                          "length must match the shared uncertainty dimension");
      cfg.coupling.push_back(std::move(con));
    }
  }

  // ---- graph ------------------------------------------------------------
  cfg.topology = get_string_or(j, "/graph/topology", "ring");
  if (has(j, "/graph/sweep")) {
    const json& sw = at(j, "/graph/sweep");
    if (!sw.is_array())
      throw ConfigError("/graph/sweep", "array of topology names expected");
    for (size_t i = 0; i < sw.size(); ++i) {
      if (!sw[i].is_string())
        throw ConfigError("/graph/sweep/" + std::to_string(i),
                          "string expected");
      cfg.sweep_topologies.push_back(sw[i].get<std::string>());
    }
  } else {
    cfg.sweep_topologies = {"complete", "star", "ring"};
  }

  // ---- solver -------------------------------------------------------------
  cfg.mode = get_string_or(j, "/solver/mode", "ripfbf");
  if (cfg.mode != "ripfbf" && cfg.mode != "tseng" && cfg.mode != "both")
    throw ConfigError("/solver/mode", "expected ripfbf, tseng or both");
  cfg.solver.sigma_bar = get_number_or(j, "/solver/sigma_bar", 0.5);
  if (!(cfg.solver.sigma_bar >= 0.0 && cfg.solver.sigma_bar < 1.0))
    throw ConfigError("/solver/sigma_bar", "must lie in [0, 1)");
  const std::string rule =
      get_string_or(j, "/solver/relaxation_rule", "conservative");
  if (rule == "conservative")
    cfg.solver.relaxation = RelaxationRule::conservative;
  else if (rule == "aggressive")
    cfg.solver.relaxation = RelaxationRule::aggressive;
  else
    throw ConfigError("/solver/relaxation_rule",
                      "expected conservative or aggressive");
  cfg.solver.tolerance = get_number_or(j, "/solver/tolerance", 1e-6);
  if (cfg.solver.tolerance <= 0.0)
    throw ConfigError("/solver/tolerance", "must be positive");
  cfg.solver.max_iterations = get_int_or(j, "/solver/max_iterations", 50000);
  if (cfg.solver.max_iterations < 1)
    throw ConfigError("/solver/max_iterations", "must be at least 1");
  cfg.solver.record_timing = get_bool_or(j, "/solver/record_timing", false);
  cfg.solver.phi_norm_residual =
      get_bool_or(j, "/solver/phi_norm_residual", false);

  // ---- preconditioner --------------------------------------------------------
  const std::string pk = get_string_or(j, "/preconditioner/kind", "uniform");
  if (pk == "uniform")
    cfg.solver.precond.kind = PreconditionerSpec::Kind::uniform;
  else if (pk == "evenly_spaced")
    cfg.solver.precond.kind = PreconditionerSpec::Kind::evenly_spaced;
  else if (pk == "custom")
    cfg.solver.precond.kind = PreconditionerSpec::Kind::custom;
  else
    throw ConfigError("/preconditioner/kind",
                      "expected uniform, evenly_spaced or custom");
  cfg.solver.precond.fraction =
      get_number_or(j, "/preconditioner/fraction", 0.5);
  if (!(cfg.solver.precond.fraction > 0.0 &&
        cfg.solver.precond.fraction < 1.0))
    throw ConfigError("/preconditioner/fraction",
                      "must lie strictly in (0, 1)");
  if (has(j, "/preconditioner/fractions")) {
    const Eigen::VectorXd fr = get_vector(j, "/preconditioner/fractions");
    cfg.solver.precond.fractions.assign(fr.data(), fr.data() + fr.size());
  }
  if (cfg.solver.precond.kind == PreconditionerSpec::Kind::custom &&
      static_cast<int>(cfg.solver.precond.fractions.size()) != cfg.num_agents)
    throw ConfigError("/preconditioner/fractions",
                      "custom kind needs one fraction per agent");

  // ---- misc ---------------------------------------------------------------
  cfg.centralized_reference = get_bool_or(j, "/centralized_reference", false);
  cfg.verify_best_response = get_bool_or(j, "/verify/best_response", true);
  cfg.out_dir = get_string_or(j, "/out_dir", "out");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("/", "cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text);
}

UncertainGame instantiate_game(const ExperimentConfig& cfg,
                               const CommGraph& graph) {
  if (graph.N != cfg.num_agents)
    throw std::invalid_argument(
        "instantiate_game: graph size differs from the configured agents");
  UncertainGame game;
  const Polytope box = Polytope::box(cfg.box_lo, cfg.box_hi);
  for (int i = 0; i < cfg.num_agents; ++i) {
    Agent a;
    a.dim = cfg.agent_dim;
    a.local_set = box;
    if (cfg.cost.kind == "neighbor_average") {
      QuadraticCost qc;
      qc.Q = Eigen::MatrixXd::Identity(cfg.agent_dim, cfg.agent_dim);
      const double inv_deg = 1.0 / static_cast<double>(graph.degree(i));
      for (int jn : graph.neighbors[i])
        qc.cross[jn] =
            inv_deg * Eigen::MatrixXd::Identity(cfg.agent_dim, cfg.agent_dim);
      qc.linear = Eigen::VectorXd::Constant(cfg.agent_dim,
                                            -cfg.cost.alpha_scale[i]);
      a.cost = std::move(qc);
    } else {
      QuadraticCost qc;
      qc.Q = cfg.cost.Q[i];
      qc.linear = cfg.cost.linear[i];
      for (const auto& [other, m] : cfg.cost.cross[i]) qc.cross[other] = m;
      a.cost = std::move(qc);
    }
    game.agents.push_back(std::move(a));
  }
  game.coupling = cfg.coupling;
  game.uncertainty = cfg.uncertainty;
  return game;
}

}  // namespace rgnep
