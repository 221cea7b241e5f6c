// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ftsolve/experiment.hpp"

using namespace ftsolve;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ExperimentConfig fixture_config(FlowKind flow) {
  ExperimentConfig cfg;
  cfg.flow = flow;
  cfg.h = 1e-3;
  cfg.t_max = 100.0;
  cfg.sample_every = 100;
  if (flow == FlowKind::centralized_l1) cfg.stop.kind = StopCriterion::Kind::stationary;
  return cfg;
}

ExperimentConfig distributed_config(double delta_bar, double delta, double t_max) {
  auto cfg = fixture_config(FlowKind::distributed_l1);
  cfg.delta_bar = delta_bar;
  cfg.delta = delta;
  cfg.t_max = t_max;
  cfg.sample_every = 1000;
  return cfg;
}

struct Run {
  std::string label;
  ExperimentConfig cfg;
  RunResult result;
};

std::vector<Run> runs;  // every acceptance run, kept for criterion 7

const Run& do_run(const std::string& label, const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  runs.push_back({label, cfg, run_experiment(cfg)});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto& s = runs.back().result.summary;
  std::printf("  run %-28s %s t=%-9.6g steps=%-7ld (%.1f s)\n", label.c_str(), s.converged ? "converged    " : "not converged",
              s.stop_time, s.steps, secs);
  std::fflush(stdout);
  return runs.back();
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

Verdict criterion_1() {
  Verdict v;
  const auto& run = do_run("example1 consensus", fixture_config(FlowKind::consensus));
  const auto& s = run.result.summary;
  const auto& tr = run.result.trajectory;
  v.require(s.converged && s.stop_time < run.cfg.t_max, "did not converge before t_max");
  v.require(s.final_consensus_residual <= 1e-3, "consensus residual " + fmt("%.3g", s.final_consensus_residual));
  v.require(s.final_constraint_residual <= 1e-8, "constraint residual " + fmt("%.3g", s.final_constraint_residual));
  const double gap = stationarity_gap(tr, 1.0);
  const double bound = 10 * run.cfg.h * 12;
  v.require(gap <= bound, "stationarity gap " + fmt("%.3g", gap));
  if (v.pass)
    v.detail = "T=" + fmt("%.4g", s.stop_time) + ", consensus " + fmt("%.2e", s.final_consensus_residual) +
               ", constraint " + fmt("%.2e", s.final_constraint_residual) + ", gap(1.0) " + fmt("%.2e", gap) +
               " <= " + fmt("%.3g", bound);
  return v;
}

Verdict criterion_2() {
  Verdict v;
  const auto& run = do_run("example2 centralized", fixture_config(FlowKind::centralized_l1));
  const auto& s = run.result.summary;
  const auto& tr = run.result.trajectory;
  v.require(s.converged, "did not converge before t_max");
  v.require(s.l1_gap_max && *s.l1_gap_max <= 1e-3, "l1 gap " + fmt("%.3g", s.l1_gap_max.value_or(INFINITY)));
  v.require(s.final_constraint_residual <= 1e-8, "constraint residual " + fmt("%.3g", s.final_constraint_residual));
  const double slack = 2 * run.cfg.h * max_degree(fixture_paper_4agent().graph) * 12;
  double worst_rise = 0.0;
  for (std::size_t k = 1; k < tr.size(); ++k) worst_rise = std::max(worst_rise, tr.l1_norm[k](0) - tr.l1_norm[k - 1](0));
  v.require(worst_rise <= slack, "|y|_1 rose by " + fmt("%.3g", worst_rise));
  if (v.pass)
    v.detail = "|y|_1=" + fmt("%.10g", s.final_l1(0)) + " vs LP " + fmt("%.10g", *s.oracle_value) + " (gap " +
               fmt("%.2e", *s.l1_gap_max) + "), largest rise " + fmt("%.2e", worst_rise);
  return v;
}

Verdict criterion_3() {
  Verdict v;
  struct Case {
    double delta_bar, delta, t_max;
  };
  // the first three must converge; the last three form the ordering check at delta_bar = 0.1
  const Case cases[] = {{0.1, 0.01, 400}, {0.1, 0.1, 400}, {1.0, 0.01, 400}, {0.1, 0.0, 400}};
  double stop[4];
  for (int c = 0; c < 4; ++c) {
    const auto& k = cases[c];
    const auto& run = do_run("example3 db=" + fmt("%g", k.delta_bar) + " d=" + fmt("%g", k.delta),
                             distributed_config(k.delta_bar, k.delta, k.t_max));
    const auto& s = run.result.summary;
    stop[c] = s.converged ? s.stop_time : INFINITY;
    if (c == 3) continue;
    const std::string tag = "(" + fmt("%g", k.delta_bar) + "," + fmt("%g", k.delta) + ")";
    v.require(s.converged, tag + " did not converge");
    v.require(s.final_consensus_residual <= 1e-3, tag + " consensus " + fmt("%.3g", s.final_consensus_residual));
    v.require(s.l1_gap_max && *s.l1_gap_max <= 5e-3, tag + " agent l1 gap " + fmt("%.3g", s.l1_gap_max.value_or(INFINITY)));
  }
  v.require(stop[1] < stop[0] && stop[0] < stop[3], "stop-time ordering T(0.1) < T(0.01) < T(0) violated");
  if (v.pass)
    v.detail = "T(0.1,0.01)=" + fmt("%.4g", stop[0]) + ", T(0.1,0.1)=" + fmt("%.4g", stop[1]) + ", T(1,0.01)=" +
               fmt("%.4g", stop[2]) + ", T(0.1,0)=" + (std::isinf(stop[3]) ? std::string("not reached by t=400") : fmt("%.4g", stop[3]));
  return v;
}

Verdict criterion_4() {
  Verdict v;
  std::mt19937_64 rng(20240501);
  std::uniform_int_distribution<int> rows(2, 4), cols(4, 8);
  std::normal_distribution<double> nd;
  double worst_value = 0.0, worst_cert = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    const int m = rows(rng), n = cols(rng);
    const Matrix a = Matrix::NullaryExpr(m, n, [&] { return nd(rng); });
    const Vector b = Vector::NullaryExpr(m, [&] { return nd(rng); });
    const auto lp = min_l1_lp(a, b);
    const auto ve = vertex_enum_oracle(a, b);
    worst_value = std::max(worst_value, std::abs(lp.optimal_value - ve.optimal_value));
    const auto chk = verify_certificate(a, b, lp);
    worst_cert = std::max({worst_cert, chk.feasibility, chk.dual_bound, chk.dual_range, chk.complementarity});
  }
  v.require(worst_value <= 1e-8, "value mismatch " + fmt("%.3g", worst_value));
  v.require(worst_cert <= 1e-8, "certificate residual " + fmt("%.3g", worst_cert));
  if (v.pass)
    v.detail = "100 systems, max |simplex - vertex| " + fmt("%.2e", worst_value) + ", max certificate residual " +
               fmt("%.2e", worst_cert);
  return v;
}

Network random_connected_graph(std::mt19937_64& rng, int m) {
  std::vector<Edge> edges;
  std::vector<std::vector<char>> used(static_cast<std::size_t>(m + 1), std::vector<char>(static_cast<std::size_t>(m + 1), 0));
  auto add = [&](int a, int b) {
    if (a == b || used[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]) return;
    used[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = used[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = 1;
    edges.push_back({a, b});
  };
  for (int node = 2; node <= m; ++node) add(node, std::uniform_int_distribution<int>(1, node - 1)(rng));
  const int extra = std::uniform_int_distribution<int>(0, m)(rng);
  for (int e = 0; e < extra; ++e)
    add(std::uniform_int_distribution<int>(1, m)(rng), std::uniform_int_distribution<int>(1, m)(rng));
  return Network(m, edges);
}

Eigen::Index svd_rank(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  return (s.array() > 1e-9 * std::max(1.0, s(0))).count();
}

Verdict criterion_5() {
  Verdict v;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_proj = 0.0;
  int image_fail = 0, kernel_fail = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int m = std::uniform_int_distribution<int>(2, 5)(rng);
    const int rows = std::uniform_int_distribution<int>(1, 2)(rng);
    const Eigen::Index n = m * rows + std::uniform_int_distribution<int>(1, 4)(rng);
    std::vector<Block> blocks;
    for (int i = 0; i < m; ++i)
      blocks.push_back({Matrix::NullaryExpr(rows, n, [&] { return u(rng); }), Vector::NullaryExpr(rows, [&] { return u(rng); })});
    const PartitionedSystem sys(blocks);
    const Network g = random_connected_graph(rng, m);
    for (const auto& b : sys.blocks()) {
      const Projector p(b.a);
      worst_proj = std::max({worst_proj, p.symmetry_error(), p.idempotency_error(), p.annihilation_error()});
    }
    const auto ex = stack_and_expand(sys, g);
    // image Hbar and ker Pbar meet only at 0: rank [Hbar | ker Pbar] = rank Hbar + dim ker Pbar
    Eigen::JacobiSVD<Matrix> svd(ex.p_bar, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const Eigen::Index r = (s.array() > 1e-9).count();
    const Matrix kernel = svd.matrixV().rightCols(ex.p_bar.cols() - r);
    Matrix joined(ex.h_bar.rows(), ex.h_bar.cols() + kernel.cols());
    joined << ex.h_bar, kernel;
    if (svd_rank(joined) != svd_rank(ex.h_bar) + kernel.cols()) ++image_fail;
    const Matrix h = incidence_matrix(g);
    if ((h.transpose() * Vector::Ones(m)).norm() != 0.0 || svd_rank(h) != m - 1) ++kernel_fail;
  }
  v.require(worst_proj <= 1e-10, "projector invariant " + fmt("%.3g", worst_proj));
  v.require(image_fail == 0, std::to_string(image_fail) + " image/kernel rank failures");
  v.require(kernel_fail == 0, std::to_string(kernel_fail) + " incidence kernel failures");
  if (v.pass) v.detail = "50 pairs, worst projector invariant " + fmt("%.2e", worst_proj) + ", rank tests all full";
  return v;
}

Verdict criterion_6() {
  Verdict v;
  const auto fx = fixture_paper_4agent();
  const double eps = 1e-2;
  const auto cons = FlowSpec::consensus(fx.system, fx.graph, eps);
  const auto dist0 = FlowSpec::distributed_l1(fx.system, fx.graph, KSchedule::constant(0.0), eps);
  const auto merged = fx.system.merged();
  const auto cent = FlowSpec::centralized_l1(merged, eps);
  const auto dist1 = FlowSpec::distributed_l1(merged, Network(1, {}), KSchedule::constant(1.0), eps);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> coin(0, 3);
  int mismatch0 = 0, mismatch1 = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    // some entries snapped into the dead zone so the zero branch is exercised
    auto draw = [&] { return coin(rng) == 0 ? 1e-3 * nd(rng) : nd(rng); };
    const StackedState y(4, 12, Vector::NullaryExpr(48, draw));
    const double t = 0.05 * trial;
    if (!(rhs_distributed_l1(t, y, dist0) == rhs_consensus(y, cons))) ++mismatch0;
    const StackedState z(1, 12, Vector::NullaryExpr(12, draw));
    if (!(rhs_distributed_l1(t, z, dist1) == rhs_centralized_l1(z.data(), cent.projectors()[0], eps))) ++mismatch1;
  }
  v.require(mismatch0 == 0, std::to_string(mismatch0) + " states differ for k = 0");
  v.require(mismatch1 == 0, std::to_string(mismatch1) + " states differ for m = 1");
  if (v.pass) v.detail = "1000 states each, bitwise equal";
  return v;
}

Verdict criterion_7() {
  Verdict v;
  const int maxdeg = max_degree(fixture_paper_4agent().graph);
  std::string summary;
  for (const auto& run : runs) {
    const auto& tr = run.result.trajectory;
    const double worst_constraint = max_of(tr.constraint_residual);
    v.require(worst_constraint <= 1e-8, run.label + " constraint residual " + fmt("%.3g", worst_constraint));
    double rise = 0.0;
    const double slack = 2 * run.cfg.h * maxdeg * 12;
    if (run.cfg.flow == FlowKind::consensus) {
      for (std::size_t k = 1; k < tr.size(); ++k) rise = std::max(rise, tr.consensus_residual[k] - tr.consensus_residual[k - 1]);
    } else if (run.cfg.flow == FlowKind::centralized_l1) {
      for (std::size_t k = 1; k < tr.size(); ++k) rise = std::max(rise, tr.l1_norm[k](0) - tr.l1_norm[k - 1](0));
    }
    v.require(rise <= slack, run.label + " Lyapunov channel rose by " + fmt("%.3g", rise));
    summary += (summary.empty() ? "" : ", ") + run.label + " " + fmt("%.1e", worst_constraint);
  }
  if (v.pass) v.detail = std::to_string(runs.size()) + " runs, max constraint residual: " + summary;
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict criterion_8() {
  Verdict v;
  const fs::path root = fs::temp_directory_path() / "ftsolve_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::pair<std::string, ExperimentConfig>> configs = {
      {"consensus", fixture_config(FlowKind::consensus)},
      {"centralized", fixture_config(FlowKind::centralized_l1)},
      {"distributed", distributed_config(0.1, 0.1, 10.0)},
  };
  configs[2].second.bound = true;
  configs[2].second.bound_samples = 200;
  for (auto& [name, cfg] : configs) {
    cfg.output_dir = (root / name).string();
    std::string csv[2], summary[2];
    for (int rep = 0; rep < 2; ++rep) {
      const auto res = run_experiment(cfg);
      write_outputs(res.trajectory, res.summary, cfg);
      csv[rep] = slurp(fs::path(cfg.output_dir) / "trajectory.csv");
      summary[rep] = slurp(fs::path(cfg.output_dir) / "summary.json");
    }
    v.require(!csv[0].empty() && csv[0] == csv[1], name + " trajectory.csv differs");
    v.require(!summary[0].empty() && summary[0] == summary[1], name + " summary.json differs");
  }
  fs::remove_all(root);
  if (v.pass) v.detail = "3 configs rerun, trajectory.csv and summary.json byte-identical";
  return v;
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"1 consensus flow reaches agreement on the fixture", criterion_1},
      {"2 centralized flow reaches the l1 optimum", criterion_2},
      {"3 distributed flow converges; stop time ordered in delta", criterion_3},
      {"4 simplex agrees with vertex enumeration, certificates verify", criterion_4},
      {"5 projector invariants, image/kernel rank, incidence kernel", criterion_5},
      {"6 flow reduction identities are bitwise exact", criterion_6},
      {"7 constraint invariance and Lyapunov monotonicity", criterion_7},
      {"8 reruns are byte-identical", criterion_8},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    if (!v.pass) ++failed;
    std::printf("[%s] criterion %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
