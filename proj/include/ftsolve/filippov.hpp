#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ftsolve/graph.hpp"
#include "ftsolve/linalg.hpp"
#include "ftsolve/state.hpp"

namespace ftsolve {

/// What a selection emits for entries inside the dead zone |x_k| <= eps.
enum class ZeroRule {
  zero,  ///< midpoint of [-1, 1]
  hold,  ///< previous selection entry (0 when there is none)
};

/// A member of the entrywise Filippov sign set, with dead zone eps standing in for exact zero.
struct SignSelection {
  Vector value;
  double deadzone = 0.0;
};

/// Entries +1 above eps, -1 below -eps; inside the band the zero rule decides.
inline SignSelection sgn_select(const Vector& x, double eps, ZeroRule rule = ZeroRule::zero,
                                const Vector* previous = nullptr) {
  if (!(eps >= 0.0)) throw InputError("dead zone must be nonnegative");
  require_finite(x, "sign-selection argument");
  if (rule == ZeroRule::hold && previous != nullptr && previous->size() != x.size())
    throw InputError("held selection has the wrong length");
  SignSelection s{Vector(x.size()), eps};
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (x(k) > eps)
      s.value(k) = 1.0;
    else if (x(k) < -eps)
      s.value(k) = -1.0;
    else
      s.value(k) = (rule == ZeroRule::hold && previous != nullptr) ? (*previous)(k) : 0.0;
  }
  return s;
}

/// Per-run memory for ZeroRule::hold. Owned by a single integrator.
struct SelectionCache {
  std::vector<Vector> edge;
  std::vector<Vector> agent;
};

/// One selection per oriented edge e = (i, j): phi_e from sgn(y_i - y_j).
/// Agent i uses +phi_e and agent j uses -phi_e, so the pair is antisymmetric by construction.
inline std::vector<Vector> edge_selections(const StackedState& y, const Network& g, double eps,
                                           ZeroRule rule = ZeroRule::zero, SelectionCache* cache = nullptr) {
  if (y.agents() != g.nodes()) throw InputError("state agent count does not match the network");
  std::vector<Vector> phi;
  phi.reserve(g.edge_count());
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    const auto& e = g.edges()[k];
    const Vector diff = y.block(e.head - 1) - y.block(e.tail - 1);
    const Vector* prev = (cache && cache->edge.size() == g.edge_count()) ? &cache->edge[k] : nullptr;
    phi.push_back(sgn_select(diff, eps, rule, prev).value);
  }
  if (cache && rule == ZeroRule::hold) cache->edge = phi;
  return phi;
}

/// Gain on the l1 descent term: delta_bar/(t+1) + delta, or the constant delta.
struct KSchedule {
  enum class Kind { constant, hyperbolic };
  Kind kind = Kind::hyperbolic;
  double delta_bar = 0.0;
  double delta = 0.0;

  static KSchedule constant(double delta) { return {Kind::constant, 0.0, delta}; }
  static KSchedule hyperbolic(double delta_bar, double delta) { return {Kind::hyperbolic, delta_bar, delta}; }

  void validate() const {
    if (!(delta_bar >= 0.0) || !std::isfinite(delta_bar)) throw InputError("delta_bar must be finite and >= 0");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw InputError("delta must be finite and >= 0");
  }

  /// Closed form of the integral of k over [0, t].
  double integral(double t) const {
    return kind == Kind::constant ? delta * t : delta_bar * std::log1p(t) + delta * t;
  }

  friend bool operator==(const KSchedule&, const KSchedule&) = default;
};

inline double k_schedule(const KSchedule& s, double t) {
  if (!(t >= 0.0)) throw InputError("k(t) is defined for t >= 0 only");
  return s.kind == KSchedule::Kind::constant ? s.delta : s.delta_bar / (t + 1.0) + s.delta;
}

enum class FlowKind { consensus, centralized_l1, distributed_l1 };

inline const char* to_string(FlowKind k) {
  switch (k) {
    case FlowKind::consensus: return "consensus";
    case FlowKind::centralized_l1: return "centralized_l1";
    case FlowKind::distributed_l1: return "distributed_l1";
  }
  return "?";
}

/// Everything a right-hand side needs: which flow, the equations, the network and the gain.
///
/// Projectors are computed once at construction. For the centralized flow the
/// state is a single n-vector and `projectors()` holds the projector onto ker A
/// of the stacked system.
class FlowSpec {
public:
  static FlowSpec consensus(PartitionedSystem sys, Network g, double deadzone) {
    return FlowSpec(FlowKind::consensus, std::move(sys), std::move(g), KSchedule::constant(0.0), deadzone);
  }
  static FlowSpec centralized_l1(PartitionedSystem sys, double deadzone) {
    return FlowSpec(FlowKind::centralized_l1, std::move(sys), Network(1, {}), KSchedule::constant(0.0), deadzone);
  }
  static FlowSpec distributed_l1(PartitionedSystem sys, Network g, KSchedule k, double deadzone) {
    return FlowSpec(FlowKind::distributed_l1, std::move(sys), std::move(g), k, deadzone);
  }

  FlowKind kind() const noexcept { return kind_; }
  const PartitionedSystem& system() const noexcept { return system_; }
  const Network& graph() const noexcept { return graph_; }
  const KSchedule& schedule() const noexcept { return schedule_; }
  double deadzone() const noexcept { return deadzone_; }
  const std::vector<Projector>& projectors() const noexcept { return projectors_; }
  const std::vector<std::vector<int>>& neighbors() const noexcept { return neighbors_; }

  /// Agents in the simulated state (1 for the centralized flow).
  int state_agents() const noexcept { return static_cast<int>(projectors_.size()); }
  Eigen::Index dim() const noexcept { return system_.dim(); }

  /// The (A_i, b_i) constraint each state block must satisfy.
  const Matrix& constraint_a(int i) const { return projectors_.at(static_cast<std::size_t>(i)).source(); }
  const Vector& constraint_b(int i) const {
    return kind_ == FlowKind::centralized_l1 ? system_.stacked_b() : system_.block(i).b;
  }

private:
  FlowSpec(FlowKind kind, PartitionedSystem sys, Network g, KSchedule k, double deadzone)
      : kind_(kind), system_(std::move(sys)), graph_(std::move(g)), schedule_(k), deadzone_(deadzone) {
    if (!(deadzone_ >= 0.0) || !std::isfinite(deadzone_)) throw InputError("dead zone must be finite and >= 0");
    schedule_.validate();
    if (kind_ == FlowKind::centralized_l1) {
      projectors_.emplace_back(system_.stacked_a(), "stacked A");
    } else {
      if (graph_.nodes() != system_.agents())
        throw InputError("network has " + std::to_string(graph_.nodes()) + " nodes but the system has " +
                         std::to_string(system_.agents()) + " agents");
      if (!is_connected(graph_)) throw InputError("network is not connected");
      for (int i = 0; i < system_.agents(); ++i)
        projectors_.emplace_back(system_.block(i).a, "A_" + std::to_string(i + 1));
    }
    neighbors_ = neighbor_sets(graph_);
  }

  FlowKind kind_;
  PartitionedSystem system_;
  Network graph_;
  KSchedule schedule_;
  double deadzone_;
  std::vector<Projector> projectors_;
  std::vector<std::vector<int>> neighbors_;
};

namespace detail {

/// Block i of -P_i * sum_j phi_ij - k P_i phi_i; the k term is skipped entirely when k == 0.
inline Vector projected_block(const Projector& p, const Vector& edge_sum, bool has_edges, double k,
                              const Vector* self_sel) {
  Vector v = has_edges ? Vector(-(p.matrix() * edge_sum)) : Vector(Vector::Zero(edge_sum.size()));
  if (k != 0.0 && self_sel != nullptr) v -= k * (p.matrix() * *self_sel);
  return v;
}

inline std::vector<Vector> accumulate_edges(const StackedState& y, const FlowSpec& spec, ZeroRule rule,
                                            SelectionCache* cache) {
  const auto phi = edge_selections(y, spec.graph(), spec.deadzone(), rule, cache);
  std::vector<Vector> acc(static_cast<std::size_t>(y.agents()), Vector::Zero(y.dim()));
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const auto& e = spec.graph().edges()[k];
    acc[static_cast<std::size_t>(e.head - 1)] += phi[k];
    acc[static_cast<std::size_t>(e.tail - 1)] -= phi[k];
  }
  return acc;
}

inline void check_state(const StackedState& y, const FlowSpec& spec) {
  if (y.agents() != spec.state_agents() || y.dim() != spec.dim())
    throw InputError("state shape " + std::to_string(y.agents()) + "x" + std::to_string(y.dim()) +
                     " does not match the flow (" + std::to_string(spec.state_agents()) + "x" +
                     std::to_string(spec.dim()) + ")");
}

} // namespace detail

/// Distributed solver: ydot_i = -P_i sum_{j in N_i} phi_ij.
inline Vector rhs_consensus(const StackedState& y, const FlowSpec& spec, ZeroRule rule = ZeroRule::zero,
                            SelectionCache* cache = nullptr) {
  if (spec.kind() != FlowKind::consensus) throw InputError("rhs_consensus needs a consensus flow");
  detail::check_state(y, spec);
  const auto acc = detail::accumulate_edges(y, spec, rule, cache);
  Vector out(y.data().size());
  for (int i = 0; i < y.agents(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    out.segment(i * y.dim(), y.dim()) =
        detail::projected_block(spec.projectors()[ui], acc[ui], !spec.neighbors()[ui].empty(), 0.0, nullptr);
  }
  return out;
}

/// Centralized l1 descent: ydot = -P sgn(y).
inline Vector rhs_centralized_l1(const Vector& y, const Projector& p, double eps, ZeroRule rule = ZeroRule::zero,
                                 const Vector* previous = nullptr) {
  if (y.size() != p.dim()) throw InputError("state length does not match the projector");
  const Vector phi = sgn_select(y, eps, rule, previous).value;
  return detail::projected_block(p, Vector::Zero(y.size()), false, 1.0, &phi);
}

/// Distributed l1 flow: ydot_i = -k(t) P_i phi_i - P_i sum_{j in N_i} phi_ij.
inline Vector rhs_distributed_l1(double t, const StackedState& y, const FlowSpec& spec,
                                 ZeroRule rule = ZeroRule::zero, SelectionCache* cache = nullptr) {
  if (spec.kind() != FlowKind::distributed_l1) throw InputError("rhs_distributed_l1 needs a distributed_l1 flow");
  detail::check_state(y, spec);
  const double k = k_schedule(spec.schedule(), t);
  const auto acc = detail::accumulate_edges(y, spec, rule, cache);
  const bool use_prev = cache && rule == ZeroRule::hold && cache->agent.size() == static_cast<std::size_t>(y.agents());
  std::vector<Vector> self(static_cast<std::size_t>(y.agents()));
  Vector out(y.data().size());
  for (int i = 0; i < y.agents(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    self[ui] = sgn_select(y.block(i), spec.deadzone(), rule, use_prev ? &cache->agent[ui] : nullptr).value;
    out.segment(i * y.dim(), y.dim()) =
        detail::projected_block(spec.projectors()[ui], acc[ui], !spec.neighbors()[ui].empty(), k, &self[ui]);
  }
  if (cache && rule == ZeroRule::hold) cache->agent = std::move(self);
  return out;
}

/// Dispatches on the flow kind; centralized states are single-block.
inline Vector rhs(double t, const StackedState& y, const FlowSpec& spec, ZeroRule rule = ZeroRule::zero,
                  SelectionCache* cache = nullptr) {
  switch (spec.kind()) {
    case FlowKind::consensus: return rhs_consensus(y, spec, rule, cache);
    case FlowKind::distributed_l1: return rhs_distributed_l1(t, y, spec, rule, cache);
    case FlowKind::centralized_l1: {
      detail::check_state(y, spec);
      const Vector* prev = nullptr;
      if (cache && rule == ZeroRule::hold && cache->agent.size() == 1) prev = &cache->agent[0];
      Vector phi = sgn_select(y.data(), spec.deadzone(), rule, prev).value;
      Vector out = detail::projected_block(spec.projectors()[0], Vector::Zero(y.dim()), false, 1.0, &phi);
      if (cache && rule == ZeroRule::hold) cache->agent = {std::move(phi)};
      return out;
    }
  }
  throw InternalError("unknown flow kind");
}

} // namespace ftsolve
