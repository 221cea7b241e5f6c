#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ftsolve/bound.hpp"
#include "ftsolve/filippov.hpp"
#include "ftsolve/fixture.hpp"
#include "ftsolve/integrator.hpp"
#include "ftsolve/l1_oracle.hpp"

namespace ftsolve {

using json = nlohmann::json;

/// Invalid or unparseable experiment configuration; the message names the field or position.
class ConfigError : public InputError {
public:
  using InputError::InputError;
};

struct SystemSource {
  enum class Kind { fixture_paper, inline_blocks, random };
  Kind kind = Kind::fixture_paper;
  std::vector<Block> blocks;  ///< inline_blocks only
  std::uint64_t seed = 0;     ///< random only
  int agents = 4;
  int dim = 12;
  int rows_per_agent = 2;
};

struct GraphSource {
  std::string name = "path4";  ///< path4 | ring4 | star4; empty when `custom` is set
  std::optional<Network> custom;
};

/// A fully specified run. Every field has a default except what the JSON supplies.
struct ExperimentConfig {
  SystemSource system;
  GraphSource graph;
  FlowKind flow = FlowKind::consensus;
  double delta_bar = 0.1;
  double delta = 0.01;
  std::optional<double> deadzone;  ///< defaults to 10 h
  SelectionMode selection = SelectionMode::sliding;
  double h = 1e-3;
  double t_max = 100.0;
  StopCriterion stop{};
  long sample_every = 100;
  InitMode init{};
  std::string output_dir = "out";
  bool bound = false;
  long bound_samples = 100000;

  double effective_deadzone() const { return deadzone.value_or(10.0 * h); }
};

namespace detail {

inline bool same_blocks(const std::vector<Block>& a, const std::vector<Block>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].a.rows() != b[i].a.rows() || a[i].a.cols() != b[i].a.cols() || a[i].a != b[i].a || a[i].b != b[i].b)
      return false;
  return true;
}

} // namespace detail

inline bool operator==(const SystemSource& a, const SystemSource& b) {
  return a.kind == b.kind && detail::same_blocks(a.blocks, b.blocks) && a.seed == b.seed && a.agents == b.agents &&
         a.dim == b.dim && a.rows_per_agent == b.rows_per_agent;
}
inline bool operator==(const GraphSource& a, const GraphSource& b) { return a.name == b.name && a.custom == b.custom; }
inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.system == b.system && a.graph == b.graph && a.flow == b.flow && a.delta_bar == b.delta_bar &&
         a.delta == b.delta && a.deadzone == b.deadzone && a.selection == b.selection && a.h == b.h &&
         a.t_max == b.t_max && a.stop == b.stop && a.sample_every == b.sample_every && a.init == b.init &&
         a.output_dir == b.output_dir && a.bound == b.bound && a.bound_samples == b.bound_samples;
}

// ---------------------------------------------------------------------------
// building blocks from a config

inline PartitionedSystem random_system(std::uint64_t seed, int agents, int dim, int rows_per_agent) {
  if (agents < 1 || dim < 1 || rows_per_agent < 1) throw InputError("random system sizes must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Block> blocks;
  for (int i = 0; i < agents; ++i) {
    Block blk{Matrix(rows_per_agent, dim), Vector(rows_per_agent)};
    for (int r = 0; r < rows_per_agent; ++r)
      for (int c = 0; c < dim; ++c) blk.a(r, c) = u(rng);
    for (int r = 0; r < rows_per_agent; ++r) blk.b(r) = u(rng);
    blocks.push_back(std::move(blk));
  }
  return PartitionedSystem(std::move(blocks));
}

inline PartitionedSystem build_system(const SystemSource& src) {
  switch (src.kind) {
    case SystemSource::Kind::fixture_paper: return fixture_paper_4agent().system;
    case SystemSource::Kind::inline_blocks: return PartitionedSystem(src.blocks);
    case SystemSource::Kind::random: return random_system(src.seed, src.agents, src.dim, src.rows_per_agent);
  }
  throw InternalError("unknown system source");
}

inline Network build_graph(const GraphSource& g) {
  if (g.custom) return *g.custom;
  if (g.name == "path4") return Network::path(4);
  if (g.name == "ring4") return Network::ring(4);
  if (g.name == "star4") return Network::star(4);
  throw ConfigError("graph: unknown named graph '" + g.name + "' (expected path4, ring4 or star4)");
}

inline FlowSpec build_flow(const ExperimentConfig& cfg, const PartitionedSystem& sys, const Network& g) {
  switch (cfg.flow) {
    case FlowKind::consensus: return FlowSpec::consensus(sys, g, cfg.effective_deadzone());
    case FlowKind::centralized_l1: return FlowSpec::centralized_l1(sys, cfg.effective_deadzone());
    case FlowKind::distributed_l1:
      return FlowSpec::distributed_l1(sys, g, KSchedule::hyperbolic(cfg.delta_bar, cfg.delta), cfg.effective_deadzone());
  }
  throw InternalError("unknown flow kind");
}

// ---------------------------------------------------------------------------
// JSON <-> config

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
T field(const json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + ": wrong type");
  }
}

inline Matrix matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) throw ConfigError(path + ": rows must be non-empty arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError(path + ": row " + std::to_string(r + 1) + " has the wrong length");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ConfigError(path + ": non-numeric entry");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

inline Vector vector_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ConfigError(path + ": non-numeric entry");
    v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  }
  return v;
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (auto x : v) out.push_back(x);
  return out;
}

inline FlowKind flow_from_string(const std::string& s) {
  if (s == "consensus") return FlowKind::consensus;
  if (s == "centralized_l1") return FlowKind::centralized_l1;
  if (s == "distributed_l1") return FlowKind::distributed_l1;
  throw ConfigError("flow: unknown flow '" + s + "' (expected consensus, centralized_l1 or distributed_l1)");
}

inline SelectionMode selection_from_string(const std::string& s) {
  if (s == "sliding") return SelectionMode::sliding;
  if (s == "zero") return SelectionMode::zero;
  if (s == "hold") return SelectionMode::hold;
  throw ConfigError("selection: unknown mode '" + s + "' (expected sliding, zero or hold)");
}

inline const char* stop_kind_name(StopCriterion::Kind k) {
  switch (k) {
    case StopCriterion::Kind::consensus_and_stationary: return "consensus_and_stationary";
    case StopCriterion::Kind::stationary: return "stationary";
    case StopCriterion::Kind::max_time: return "max_time";
  }
  return "?";
}

inline StopCriterion::Kind stop_kind_from_string(const std::string& s) {
  if (s == "consensus_and_stationary") return StopCriterion::Kind::consensus_and_stationary;
  if (s == "stationary") return StopCriterion::Kind::stationary;
  if (s == "max_time") return StopCriterion::Kind::max_time;
  throw ConfigError("stop.kind: unknown kind '" + s + "'");
}

} // namespace detail

/// Config -> JSON with every default spelled out.
inline json to_json(const ExperimentConfig& cfg) {
  json j;
  json sys;
  switch (cfg.system.kind) {
    case SystemSource::Kind::fixture_paper: sys["source"] = "fixture_paper"; break;
    case SystemSource::Kind::inline_blocks: {
      sys["source"] = "inline";
      json blocks = json::array();
      for (const auto& b : cfg.system.blocks)
        blocks.push_back({{"A", detail::matrix_to_json(b.a)}, {"b", detail::vector_to_json(b.b)}});
      sys["blocks"] = blocks;
      break;
    }
    case SystemSource::Kind::random:
      sys = {{"source", "random"}, {"seed", cfg.system.seed}, {"m", cfg.system.agents}, {"n", cfg.system.dim},
             {"rows_per_agent", cfg.system.rows_per_agent}};
      break;
  }
  j["system"] = sys;
  if (cfg.graph.custom) {
    json edges = json::array();
    for (const auto& e : cfg.graph.custom->edges()) edges.push_back({e.head, e.tail});
    j["graph"] = {{"nodes", cfg.graph.custom->nodes()}, {"edges", edges}};
  } else {
    j["graph"] = cfg.graph.name;
  }
  j["flow"] = to_string(cfg.flow);
  j["delta_bar"] = cfg.delta_bar;
  j["delta"] = cfg.delta;
  j["deadzone"] = cfg.deadzone ? json(*cfg.deadzone) : json(nullptr);
  j["selection"] = to_string(cfg.selection);
  j["h"] = cfg.h;
  j["t_max"] = cfg.t_max;
  j["stop"] = {{"kind", detail::stop_kind_name(cfg.stop.kind)}, {"tol", cfg.stop.tol}, {"dwell", cfg.stop.dwell}};
  j["sample_every"] = cfg.sample_every;
  if (cfg.init.kind == InitMode::Kind::min_norm)
    j["init"] = {{"mode", "min_norm"}};
  else
    j["init"] = {{"mode", "min_norm_plus_kernel"}, {"seed", cfg.init.seed}, {"scale", cfg.init.scale}};
  j["output_dir"] = cfg.output_dir;
  j["bound"] = cfg.bound;
  j["bound_samples"] = cfg.bound_samples;
  return j;
}

/// Builds the system, graph and flow the config describes, reporting failures against the field.
inline void validate(const ExperimentConfig& cfg) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + ": must be positive and finite");
  };
  positive(cfg.h, "h");
  positive(cfg.t_max, "t_max");
  positive(cfg.stop.tol, "stop.tol");
  if (!(cfg.delta_bar >= 0.0) || !std::isfinite(cfg.delta_bar)) throw ConfigError("delta_bar: must be >= 0");
  if (!(cfg.delta >= 0.0) || !std::isfinite(cfg.delta)) throw ConfigError("delta: must be >= 0");
  if (!(cfg.stop.dwell >= 0.0) || !std::isfinite(cfg.stop.dwell)) throw ConfigError("stop.dwell: must be >= 0");
  if (cfg.deadzone && (!(*cfg.deadzone >= 0.0) || !std::isfinite(*cfg.deadzone)))
    throw ConfigError("deadzone: must be >= 0");
  if (cfg.sample_every < 1) throw ConfigError("sample_every: must be >= 1");
  if (cfg.bound_samples < 1) throw ConfigError("bound_samples: must be >= 1");
  if (cfg.output_dir.empty()) throw ConfigError("output_dir: must not be empty");
  if (cfg.init.kind == InitMode::Kind::min_norm_plus_kernel && (!(cfg.init.scale >= 0.0) || !std::isfinite(cfg.init.scale)))
    throw ConfigError("init.scale: must be >= 0");

  PartitionedSystem sys;
  try {
    sys = build_system(cfg.system);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
  const Network g = build_graph(cfg.graph);
  if (cfg.flow != FlowKind::centralized_l1) {
    if (g.nodes() != sys.agents())
      throw ConfigError("graph: " + std::to_string(g.nodes()) + " nodes but the system has " +
                        std::to_string(sys.agents()) + " agents");
    if (!is_connected(g)) throw ConfigError("graph: network is not connected (agents must form a connected graph)");
  }
}

/// JSON -> validated config. Unknown keys are rejected at every level.
inline ExperimentConfig config_from_json(const json& j) {
  detail::reject_unknown(j, {"system", "graph", "flow", "delta_bar", "delta", "deadzone", "selection", "h", "t_max",
                             "stop", "sample_every", "init", "output_dir", "bound", "bound_samples"},
                         "config");
  ExperimentConfig cfg;

  if (j.contains("system")) {
    const json& s = j.at("system");
    if (!s.is_object() || !s.contains("source")) throw ConfigError("system: expected an object with 'source'");
    const auto source = detail::field<std::string>(s, "source", "system.source", "");
    if (source == "fixture_paper") {
      detail::reject_unknown(s, {"source"}, "system");
      cfg.system.kind = SystemSource::Kind::fixture_paper;
    } else if (source == "inline") {
      detail::reject_unknown(s, {"source", "blocks"}, "system");
      cfg.system.kind = SystemSource::Kind::inline_blocks;
      if (!s.contains("blocks") || !s.at("blocks").is_array() || s.at("blocks").empty())
        throw ConfigError("system.blocks: expected a non-empty array");
      std::size_t k = 0;
      for (const auto& b : s.at("blocks")) {
        const auto where = "system.blocks[" + std::to_string(k++) + "]";
        detail::reject_unknown(b, {"A", "b"}, where);
        if (!b.contains("A") || !b.contains("b")) throw ConfigError(where + ": needs 'A' and 'b'");
        cfg.system.blocks.push_back({detail::matrix_from_json(b.at("A"), where + ".A"),
                                     detail::vector_from_json(b.at("b"), where + ".b")});
      }
    } else if (source == "random") {
      detail::reject_unknown(s, {"source", "seed", "m", "n", "rows_per_agent"}, "system");
      cfg.system.kind = SystemSource::Kind::random;
      if (!s.contains("seed")) throw ConfigError("system.seed: required for random systems");
      cfg.system.seed = detail::field<std::uint64_t>(s, "seed", "system.seed", 0);
      cfg.system.agents = detail::field<int>(s, "m", "system.m", 4);
      cfg.system.dim = detail::field<int>(s, "n", "system.n", 12);
      cfg.system.rows_per_agent = detail::field<int>(s, "rows_per_agent", "system.rows_per_agent", 2);
    } else {
      throw ConfigError("system.source: unknown source '" + source + "' (expected fixture_paper, inline or random)");
    }
  }

  if (j.contains("graph")) {
    const json& g = j.at("graph");
    if (g.is_string()) {
      cfg.graph.name = g.get<std::string>();
      build_graph(cfg.graph);
    } else if (g.is_object()) {
      detail::reject_unknown(g, {"nodes", "edges"}, "graph");
      const int nodes = detail::field<int>(g, "nodes", "graph.nodes", 0);
      if (!g.contains("edges") || !g.at("edges").is_array()) throw ConfigError("graph.edges: expected an array");
      std::vector<Edge> edges;
      for (const auto& e : g.at("edges")) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
          throw ConfigError("graph.edges: each edge is a pair of node ids");
        edges.push_back({e[0].get<int>(), e[1].get<int>()});
      }
      try {
        cfg.graph.custom = Network(nodes, std::move(edges));
      } catch (const InputError& e) {
        throw ConfigError(std::string("graph: ") + e.what());
      }
      cfg.graph.name.clear();
    } else {
      throw ConfigError("graph: expected a name or {nodes, edges}");
    }
  }

  cfg.flow = detail::flow_from_string(detail::field<std::string>(j, "flow", "flow", to_string(cfg.flow)));
  cfg.delta_bar = detail::field<double>(j, "delta_bar", "delta_bar", cfg.delta_bar);
  cfg.delta = detail::field<double>(j, "delta", "delta", cfg.delta);
  if (j.contains("deadzone") && !j.at("deadzone").is_null()) cfg.deadzone = detail::field<double>(j, "deadzone", "deadzone", 0.0);
  cfg.selection = detail::selection_from_string(detail::field<std::string>(j, "selection", "selection", to_string(cfg.selection)));
  cfg.h = detail::field<double>(j, "h", "h", cfg.h);
  cfg.t_max = detail::field<double>(j, "t_max", "t_max", cfg.t_max);
  if (j.contains("stop")) {
    const json& s = j.at("stop");
    detail::reject_unknown(s, {"kind", "tol", "dwell"}, "stop");
    cfg.stop.kind = detail::stop_kind_from_string(
        detail::field<std::string>(s, "kind", "stop.kind", detail::stop_kind_name(cfg.stop.kind)));
    cfg.stop.tol = detail::field<double>(s, "tol", "stop.tol", cfg.stop.tol);
    cfg.stop.dwell = detail::field<double>(s, "dwell", "stop.dwell", cfg.stop.dwell);
  }
  cfg.sample_every = detail::field<long>(j, "sample_every", "sample_every", cfg.sample_every);
  if (j.contains("init")) {
    const json& in = j.at("init");
    detail::reject_unknown(in, {"mode", "seed", "scale"}, "init");
    const auto mode = detail::field<std::string>(in, "mode", "init.mode", "min_norm");
    if (mode == "min_norm") {
      cfg.init = InitMode::min_norm();
    } else if (mode == "min_norm_plus_kernel") {
      cfg.init = InitMode::with_kernel(detail::field<std::uint64_t>(in, "seed", "init.seed", 0),
                                       detail::field<double>(in, "scale", "init.scale", 1.0));
    } else {
      throw ConfigError("init.mode: unknown mode '" + mode + "'");
    }
  }
  cfg.output_dir = detail::field<std::string>(j, "output_dir", "output_dir", cfg.output_dir);
  cfg.bound = detail::field<bool>(j, "bound", "bound", cfg.bound);
  cfg.bound_samples = detail::field<long>(j, "bound_samples", "bound_samples", cfg.bound_samples);

  validate(cfg);
  return cfg;
}

/// Parses `text` (JSON); syntax errors report line and column.
inline ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t k = 0; k < upto; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": JSON parse error: " + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// running

struct RunSummary {
  FlowKind flow = FlowKind::consensus;
  bool converged = false;
  double stop_time = 0.0;
  long steps = 0;
  double h = 0.0;
  double deadzone = 0.0;
  double final_consensus_residual = 0.0;
  double final_constraint_residual = 0.0;
  Vector final_l1;                      ///< per agent
  std::optional<double> oracle_value;   ///< l1 flows only
  std::optional<std::string> oracle_unique;
  std::optional<double> l1_gap;         ///< mean over agents of | |y_i|_1 - oracle |
  std::optional<double> l1_gap_max;
  std::optional<DeltaBound> bound;
};

struct RunResult {
  Trajectory trajectory;
  RunSummary summary;
};

inline RunResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const PartitionedSystem sys = build_system(cfg.system);
  const Network g = build_graph(cfg.graph);
  const FlowSpec spec = build_flow(cfg, sys, g);

  IntegratorOptions opt;
  opt.h = cfg.h;
  opt.t_max = cfg.t_max;
  opt.stop = cfg.stop;
  opt.sample_every = cfg.sample_every;
  opt.selection = cfg.selection;

  RunResult res;
  res.trajectory = integrate(spec, initial_state(spec, cfg.init), opt);
  const Trajectory& tr = res.trajectory;

  RunSummary& s = res.summary;
  s.flow = cfg.flow;
  s.converged = tr.converged;
  s.stop_time = tr.stop_time;
  s.steps = tr.steps;
  s.h = cfg.h;
  s.deadzone = cfg.effective_deadzone();
  s.final_consensus_residual = tr.consensus_residual.back();
  s.final_constraint_residual = tr.constraint_residual.back();
  s.final_l1 = tr.l1_norm.back();
  if (cfg.flow != FlowKind::consensus) {
    const auto cert = min_l1_lp(sys.stacked_a(), sys.stacked_b());
    s.oracle_value = cert.optimal_value;
    s.oracle_unique = to_string(cert.unique);
    const Vector gaps = (s.final_l1.array() - cert.optimal_value).abs();
    s.l1_gap = gaps.mean();
    s.l1_gap_max = gaps.maxCoeff();
  }
  if (cfg.bound && cfg.flow != FlowKind::centralized_l1) s.bound = delta_bound_estimate(sys, g, cfg.bound_samples);
  return res;
}

// ---------------------------------------------------------------------------
// output

inline nlohmann::ordered_json bound_to_json(const DeltaBound& b) {
  nlohmann::ordered_json j;
  j["available"] = b.available;
  j["regime"] = b.exhaustive ? "exhaustive" : "sampled";
  j["rho"] = b.available ? nlohmann::ordered_json(b.rho) : nlohmann::ordered_json(nullptr);
  j["kappa"] = b.kappa;
  j["delta_max"] = b.available ? nlohmann::ordered_json(b.delta_max) : nlohmann::ordered_json(nullptr);
  j["patterns"] = b.patterns;
  j["members"] = b.members;
  j["note"] = b.note;
  return j;
}

inline nlohmann::ordered_json summary_to_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["flow"] = to_string(s.flow);
  j["converged"] = s.converged;
  j["stop_time"] = s.stop_time;
  j["steps"] = s.steps;
  j["h"] = s.h;
  j["deadzone"] = s.deadzone;
  j["final_consensus_residual"] = s.final_consensus_residual;
  j["final_constraint_residual"] = s.final_constraint_residual;
  j["final_l1_per_agent"] = detail::vector_to_json(s.final_l1);
  j["oracle_value"] = s.oracle_value ? nlohmann::ordered_json(*s.oracle_value) : nlohmann::ordered_json(nullptr);
  j["oracle_unique"] = s.oracle_unique ? nlohmann::ordered_json(*s.oracle_unique) : nlohmann::ordered_json(nullptr);
  j["l1_gap_mean"] = s.l1_gap ? nlohmann::ordered_json(*s.l1_gap) : nlohmann::ordered_json(nullptr);
  j["l1_gap_max"] = s.l1_gap_max ? nlohmann::ordered_json(*s.l1_gap_max) : nlohmann::ordered_json(nullptr);
  j["delta_bound"] = s.bound ? bound_to_json(*s.bound) : nlohmann::ordered_json(nullptr);
  return j;
}

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV: t, consensus_residual, constraint_residual, k, y_1_1 .. y_m_n; one row per sample.
inline std::string trajectory_csv(const Trajectory& traj) {
  if (traj.empty()) throw InputError("trajectory is empty");
  const int m = traj.states.front().agents();
  const auto n = traj.states.front().dim();
  std::string out = "t,consensus_residual,constraint_residual,k";
  for (int i = 1; i <= m; ++i)
    for (Eigen::Index c = 1; c <= n; ++c) out += ",y_" + std::to_string(i) + "_" + std::to_string(c);
  out += '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out += format_real(traj.times[k]);
    out += ',' + format_real(traj.consensus_residual[k]);
    out += ',' + format_real(traj.constraint_residual[k]);
    out += ',' + format_real(traj.k_value[k]);
    for (auto v : traj.states[k].data()) out += ',' + format_real(v);
    out += '\n';
  }
  return out;
}

/// Writes trajectory.csv and summary.json into cfg.output_dir. Nothing is written if the trajectory is empty.
inline void write_outputs(const Trajectory& traj, const RunSummary& summary, const ExperimentConfig& cfg) {
  if (traj.empty()) throw InputError("refusing to write outputs for an empty trajectory");
  const std::string csv = trajectory_csv(traj);
  nlohmann::ordered_json doc = summary_to_json(summary);
  doc["config"] = to_json(cfg);
  const std::string summary_text = doc.dump(2) + "\n";

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  auto put = [&](const std::filesystem::path& p, const std::string& text) {
    const auto tmp = p.string() + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw std::runtime_error("cannot write " + tmp);
      f << text;
      if (!f) throw std::runtime_error("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, p);
  };
  put(dir / "trajectory.csv", csv);
  put(dir / "summary.json", summary_text);
}

} // namespace ftsolve
