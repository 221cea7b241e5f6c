#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ftsolve/filippov.hpp"
#include "ftsolve/sliding.hpp"
#include "ftsolve/state.hpp"

namespace ftsolve {

/// How dead-zone entries are resolved during integration.
enum class SelectionMode {
  sliding,  ///< discrete equivalent control (SlidingSelector)
  zero,     ///< ZeroRule::zero through the rhs_* builders
  hold,     ///< ZeroRule::hold through the rhs_* builders
};

inline const char* to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::sliding: return "sliding";
    case SelectionMode::zero: return "zero";
    case SelectionMode::hold: return "hold";
  }
  return "?";
}

/// When a run counts as finished before t_max.
///
/// `stationary` means |ydot|_inf <= tol; `consensus_and_stationary` adds
/// sum over edges of |y_i - y_j|_1 <= tol. The condition must hold without
/// interruption for `dwell` time units. `max_time` never stops early.
struct StopCriterion {
  enum class Kind { consensus_and_stationary, stationary, max_time };
  Kind kind = Kind::consensus_and_stationary;
  double tol = 1e-6;
  double dwell = 0.1;

  void validate() const {
    if (!(tol > 0.0) || !std::isfinite(tol)) throw InputError("stop tolerance must be positive");
    if (!(dwell >= 0.0) || !std::isfinite(dwell)) throw InputError("stop dwell must be >= 0");
  }
  friend bool operator==(const StopCriterion&, const StopCriterion&) = default;
};

struct IntegratorOptions {
  double h = 1e-3;
  double t_max = 100.0;
  StopCriterion stop{};
  long sample_every = 100;
  SelectionMode selection = SelectionMode::sliding;
  long reproject_every = 10000;
};

/// Sampled run: times, states and the diagnostic channels, all of equal length.
struct Trajectory {
  std::vector<double> times;
  std::vector<StackedState> states;
  std::vector<double> consensus_residual;   ///< |Hbar' y|_1
  std::vector<double> constraint_residual;  ///< max_i |A_i y_i - b_i|_inf
  std::vector<double> k_value;              ///< k(t); 0 for flows without a gain
  std::vector<double> rate;                 ///< |ydot|_inf at the sample
  std::vector<Vector> l1_norm;              ///< per-agent |y_i|_1

  bool converged = false;
  double stop_time = 0.0;
  long steps = 0;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }
};

/// Sum over edges of |y_head - y_tail|_1.
inline double consensus_residual(const StackedState& y, const Network& g) {
  if (y.agents() != g.nodes()) throw InputError("state agent count does not match the network");
  double r = 0.0;
  for (const auto& e : g.edges()) r += (y.block(e.head - 1) - y.block(e.tail - 1)).lpNorm<1>();
  return r;
}

inline double constraint_residual(const StackedState& y, const FlowSpec& spec) {
  double r = 0.0;
  for (int i = 0; i < y.agents(); ++i)
    r = std::max(r, (spec.constraint_a(i) * y.block(i) - spec.constraint_b(i)).lpNorm<Eigen::Infinity>());
  return r;
}

/// Largest |y(t) - y(t_end)|_inf over samples with t >= t_end - window.
inline double stationarity_gap(const Trajectory& traj, double window) {
  if (traj.empty()) throw InputError("stationarity gap of an empty trajectory");
  if (!(window >= 0.0)) throw InputError("window must be nonnegative");
  const double t_end = traj.times.back();
  if (window > t_end - traj.times.front())
    throw InputError("window " + std::to_string(window) + " exceeds the trajectory span " +
                     std::to_string(t_end - traj.times.front()));
  const Vector& last = traj.states.back().data();
  double gap = 0.0;
  for (std::size_t k = traj.size(); k-- > 0;) {
    if (traj.times[k] < t_end - window) break;
    gap = std::max(gap, (traj.states[k].data() - last).lpNorm<Eigen::Infinity>());
  }
  return gap;
}

namespace detail {

/// y_i <- y_i - A_i^T (A_i A_i^T)^{-1} (A_i y_i - b_i) for every block.
class Reprojector {
public:
  explicit Reprojector(const FlowSpec& spec) : spec_(&spec) {
    for (int i = 0; i < spec.state_agents(); ++i) {
      const Matrix& a = spec.constraint_a(i);
      Eigen::ColPivHouseholderQR<Matrix> qr(a * a.transpose());
      correction_.push_back(a.transpose() * qr.solve(Matrix::Identity(a.rows(), a.rows())));
    }
  }

  void apply(StackedState& y) const {
    for (int i = 0; i < y.agents(); ++i) {
      const Vector r = spec_->constraint_a(i) * y.block(i) - spec_->constraint_b(i);
      y.block(i) -= correction_[static_cast<std::size_t>(i)] * r;
    }
  }

private:
  const FlowSpec* spec_;
  std::vector<Matrix> correction_;
};

} // namespace detail

/// Explicit fixed-step integration y <- y + h f(t, y) with the selection rule in `opt`.
///
/// Samples are taken every `sample_every` steps and at termination. The gain
/// k(t) is evaluated at the left end of each step.
inline Trajectory integrate(const FlowSpec& spec, StackedState y, const IntegratorOptions& opt) {
  if (!(opt.h > 0.0) || !std::isfinite(opt.h)) throw InputError("step size h must be positive");
  if (!(opt.t_max > 0.0) || !std::isfinite(opt.t_max)) throw InputError("t_max must be positive");
  if (opt.sample_every < 1) throw InputError("sample_every must be >= 1");
  opt.stop.validate();
  detail::check_state(y, spec);
  if (const double r0 = constraint_residual(y, spec); !(r0 <= 1e-9))
    throw InputError("initial state is infeasible: max_i |A_i y_i(0) - b_i|_inf = " + std::to_string(r0));

  const Network& graph = spec.graph();
  const bool has_gain = spec.kind() == FlowKind::distributed_l1;
  std::optional<SlidingSelector> sliding;
  if (opt.selection == SelectionMode::sliding) sliding.emplace(spec, opt.h);
  SelectionCache cache;
  const ZeroRule rule = opt.selection == SelectionMode::hold ? ZeroRule::hold : ZeroRule::zero;
  const detail::Reprojector reproject(spec);

  const long max_steps = static_cast<long>(std::ceil(opt.t_max / opt.h - 1e-9));
  const long dwell_steps = static_cast<long>(std::ceil(opt.stop.dwell / opt.h - 1e-9));

  Trajectory traj;
  auto record = [&](double t, double rate) {
    traj.times.push_back(t);
    traj.states.push_back(y);
    traj.consensus_residual.push_back(consensus_residual(y, graph));
    traj.constraint_residual.push_back(constraint_residual(y, spec));
    traj.k_value.push_back(has_gain ? k_schedule(spec.schedule(), t) : 0.0);
    traj.rate.push_back(rate);
    Vector l1(y.agents());
    for (int i = 0; i < y.agents(); ++i) l1(i) = y.block(i).lpNorm<1>();
    traj.l1_norm.push_back(std::move(l1));
  };

  long held = -1;  // consecutive steps the stop condition has held
  for (long step = 0;; ++step) {
    const double t = static_cast<double>(step) * opt.h;
    const Vector ydot = sliding ? sliding->derivative(t, y.data()) : rhs(t, y, spec, rule, &cache);
    const double rate = ydot.lpNorm<Eigen::Infinity>();

    bool stop_now = false;
    if (opt.stop.kind != StopCriterion::Kind::max_time) {
      bool ok = rate <= opt.stop.tol;
      if (ok && opt.stop.kind == StopCriterion::Kind::consensus_and_stationary)
        ok = consensus_residual(y, graph) <= opt.stop.tol;
      held = ok ? held + 1 : -1;
      stop_now = held >= dwell_steps;
    }
    const bool last = stop_now || step >= max_steps;
    if (step % opt.sample_every == 0 || last) record(t, rate);
    if (last) {
      traj.converged = stop_now;
      traj.stop_time = t;
      traj.steps = step;
      break;
    }

    y.data().noalias() += opt.h * ydot;
    if (opt.reproject_every > 0 && (step + 1) % opt.reproject_every == 0) reproject.apply(y);
    if (!y.data().allFinite())
      throw BlowUpError("state became non-finite at step " + std::to_string(step + 1), step + 1);
  }
  return traj;
}

/// Initial stacked state with every block on its own constraint manifold.
inline StackedState initial_state(const FlowSpec& spec, const InitMode& mode) {
  StackedState y(spec.state_agents(), spec.dim());
  for (int i = 0; i < spec.state_agents(); ++i) {
    InitMode agent_mode = mode;
    agent_mode.seed = mode.seed + static_cast<std::uint64_t>(i);
    y.block(i) = feasible_init(spec.constraint_a(i), spec.constraint_b(i), agent_mode,
                               "A_" + std::to_string(i + 1));
  }
  return y;
}

} // namespace ftsolve
