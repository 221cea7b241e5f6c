// ftsolve: run the projection flows from JSON configs.

#include <glob.h>

#include <atomic>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "ftsolve/experiment.hpp"

namespace {

using namespace ftsolve;

constexpr int kConverged = 0;
constexpr int kError = 1;
constexpr int kNotConverged = 2;

void print_summary_line(const std::string& label, const RunSummary& s) {
  std::printf("%s: %s flow %s at t=%.6g (consensus %.3g, constraint %.3g", label.c_str(), to_string(s.flow),
              s.converged ? "converged" : "did not converge", s.stop_time, s.final_consensus_residual,
              s.final_constraint_residual);
  if (s.l1_gap_max) std::printf(", l1 gap %.3g", *s.l1_gap_max);
  std::printf(")\n");
}

int cmd_run(const std::string& path, bool quiet) {
  const auto cfg = load_config(path);
  auto res = run_experiment(cfg);
  write_outputs(res.trajectory, res.summary, cfg);
  if (!quiet) print_summary_line(path, res.summary);
  return res.summary.converged ? kConverged : kNotConverged;
}

int cmd_fixture() {
  const auto fx = fixture_paper_4agent();
  nlohmann::ordered_json out;
  json blocks = json::array();
  for (const auto& b : fx.system.blocks())
    blocks.push_back({{"A", detail::matrix_to_json(b.a)}, {"b", detail::vector_to_json(b.b)}});
  out["system"] = {{"source", "inline"}, {"blocks", blocks}};
  json edges = json::array();
  for (const auto& e : fx.graph.edges()) edges.push_back({e.head, e.tail});
  out["graph"] = {{"nodes", fx.graph.nodes()}, {"edges", edges}};
  std::cout << out.dump(2) << "\n";
  return kConverged;
}

int cmd_oracle(const std::string& path) {
  const auto cfg = load_config(path);
  const auto sys = build_system(cfg.system);
  const Matrix a = sys.stacked_a();
  const Vector b = sys.stacked_b();
  const auto cert = min_l1_lp(a, b);
  const auto check = verify_certificate(a, b, cert);
  nlohmann::ordered_json out;
  out["optimal_value"] = cert.optimal_value;
  out["x_star"] = detail::vector_to_json(cert.x_star);
  out["unique"] = to_string(cert.unique);
  out["method"] = to_string(cert.method);
  out["pivots"] = cert.pivots;
  out["perturbed"] = cert.perturbed;
  out["certificate"] = {{"feasibility", check.feasibility}, {"dual_bound", check.dual_bound},
                        {"dual_range", check.dual_range}, {"complementarity", check.complementarity},
                        {"ok", check.ok(1e-8)}};
  if (a.cols() <= 20) {
    const auto ve = vertex_enum_oracle(a, b);
    out["vertex_enum_value"] = ve.optimal_value;
  }
  std::cout << out.dump(2) << "\n";
  return kConverged;
}

int cmd_bound(const std::string& path) {
  const auto cfg = load_config(path);
  const auto sys = build_system(cfg.system);
  const auto g = build_graph(cfg.graph);
  std::cout << bound_to_json(delta_bound_estimate(sys, g, cfg.bound_samples)).dump(2) << "\n";
  return kConverged;
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  if (rc == 0)
    for (std::size_t k = 0; k < g.gl_pathc; ++k) out.emplace_back(g.gl_pathv[k]);
  globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw std::runtime_error("glob failed for '" + pattern + "'");
  return out;
}

int cmd_sweep(const std::string& pattern, unsigned jobs) {
  const auto files = expand_glob(pattern);
  if (files.empty()) throw ConfigError("no config matches '" + pattern + "'");
  std::vector<int> codes(files.size(), kError);
  std::vector<std::string> lines(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < files.size();) {
      try {
        const auto cfg = load_config(files[k]);
        auto res = run_experiment(cfg);
        write_outputs(res.trajectory, res.summary, cfg);
        codes[k] = res.summary.converged ? kConverged : kNotConverged;
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s t=%.6g -> %s", res.summary.converged ? "converged" : "not converged",
                      res.summary.stop_time, cfg.output_dir.c_str());
        lines[k] = buf;
      } catch (const std::exception& e) {
        lines[k] = std::string("error: ") + e.what();
      }
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(files.size()));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int worst = kConverged;
  for (std::size_t k = 0; k < files.size(); ++k) {
    std::printf("%s: %s\n", files[k].c_str(), lines[k].c_str());
    if (codes[k] == kError)
      worst = kError;
    else if (codes[k] == kNotConverged && worst != kError)
      worst = kNotConverged;
  }
  return worst;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-time projection flows for distributed linear equations"};
  app.require_subcommand(1);

  std::string config;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Integrate one config and write trajectory.csv and summary.json");
  run->add_option("config", config, "JSON config")->required()->check(CLI::ExistingFile);
  run->add_flag("-q,--quiet", quiet, "Suppress the summary line");

  app.add_subcommand("fixture", "Print the built-in 4-agent system as JSON");

  auto* oracle = app.add_subcommand("oracle", "Solve min |x|_1 s.t. Ax=b for the config's stacked system");
  oracle->add_option("config", config, "JSON config")->required()->check(CLI::ExistingFile);

  std::string pattern;
  unsigned jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "Run every config matching a glob");
  sweep->add_option("pattern", pattern, "Config glob, e.g. 'configs/*.json'")->required();
  sweep->add_option("-j,--jobs", jobs, "Concurrent runs (0 = hardware threads)");

  auto* bound = app.add_subcommand("bound", "Estimate the admissible limit gain delta_max");
  bound->add_option("config", config, "JSON config")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config, quiet);
    if (app.got_subcommand("fixture")) return cmd_fixture();
    if (oracle->parsed()) return cmd_oracle(config);
    if (sweep->parsed()) return cmd_sweep(pattern, jobs);
    if (bound->parsed()) return cmd_bound(config);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
  return kError;
}
