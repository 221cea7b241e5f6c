#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "ftsolve/box_qp.hpp"
#include "ftsolve/filippov.hpp"

namespace ftsolve {

/// Discrete equivalent-control selection for the three flows.
///
/// Every flow here has the form ydot = -Pbar G psi, where s = G'y are the
/// switching variables (edge differences H'y, agent states y, or both) and
/// psi_j = w_j * phi_j with phi a Filippov sign selection and w_j the term's
/// weight (1, or k(t) for the l1 term of the distributed flow).
///
/// Outside the dead zone psi_j = w_j sgn(s_j). Inside it, the entries are
/// chosen in [-w_j, w_j] so that one explicit step of length h lands the
/// dead-zone switching variables on zero: K_SS psi_S = s_S/h - K_SSbar psi_Sbar
/// with K = G'Pbar G. The box-constrained solution comes from an active-set
/// solve warm-started from the previous step. When no box
/// solution exists the minimizer is still a valid selection and the variable
/// simply leaves the band, which is the discrete picture of a sliding surface
/// that cannot be sustained.
class SlidingSelector {
public:
  SlidingSelector(const FlowSpec& spec, double h) : spec_(&spec), h_(h) {
    if (!(h > 0.0)) throw InputError("step size must be positive");
    const Eigen::Index n = spec.dim();
    const int m = spec.state_agents();
    Matrix p_bar = Matrix::Zero(m * n, m * n);
    for (int i = 0; i < m; ++i) p_bar.block(i * n, i * n, n, n) = spec.projectors()[static_cast<std::size_t>(i)].matrix();

    Matrix h_bar = kron_identity(incidence_matrix(spec.graph()), n);
    edge_vars_ = spec.kind() == FlowKind::centralized_l1 ? 0 : h_bar.cols();
    agent_vars_ = spec.kind() == FlowKind::consensus ? 0 : m * n;
    g_.resize(m * n, edge_vars_ + agent_vars_);
    if (edge_vars_ > 0) g_.leftCols(edge_vars_) = h_bar;
    if (agent_vars_ > 0) g_.rightCols(agent_vars_) = Matrix::Identity(m * n, m * n);
    pg_ = p_bar * g_;
    k_ = g_.transpose() * pg_;
    k_ = 0.5 * (k_ + k_.transpose());
    qp_.emplace(k_);
    psi_ = Vector::Zero(g_.cols());
  }

  Eigen::Index variables() const noexcept { return g_.cols(); }
  const Matrix& coupling() const noexcept { return k_; }

  /// Selection psi (weighted) for state y at time t.
  const Vector& select(double t, const Vector& y) {
    const double eps = spec_->deadzone();
    const double w_agent = spec_->kind() == FlowKind::distributed_l1 ? k_schedule(spec_->schedule(), t) : 1.0;
    const Vector s = g_.transpose() * y;
    const Eigen::Index p = s.size();

    inside_.clear();
    Vector fixed = Vector::Zero(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double w = j < edge_vars_ ? 1.0 : w_agent;
      if (s(j) > eps)
        fixed(j) = w;
      else if (s(j) < -eps)
        fixed(j) = -w;
      else
        inside_.push_back(j);
    }
    psi_ = Vector::NullaryExpr(p, [&](Eigen::Index j) { return fixed(j) != 0.0 ? fixed(j) : psi_(j); });
    if (!inside_.empty()) {
      const auto q = static_cast<Eigen::Index>(inside_.size());
      const Vector target = s / h_ - k_ * fixed;
      Vector c(q), lo(q), hi(q), x0(q);
      for (Eigen::Index a = 0; a < q; ++a) {
        const Eigen::Index ja = inside_[static_cast<std::size_t>(a)];
        const double w = ja < edge_vars_ ? 1.0 : w_agent;
        c(a) = target(ja);
        lo(a) = -w;
        hi(a) = w;
        x0(a) = psi_(ja);
      }
      const auto sol = qp_->solve(inside_, c, lo, hi, x0);
      for (Eigen::Index a = 0; a < q; ++a) psi_(inside_[static_cast<std::size_t>(a)]) = sol.x(a);
      last_sweeps_ = sol.sweeps;
    } else {
      last_sweeps_ = 0;
    }
    return psi_;
  }

  /// ydot = -Pbar G psi.
  Vector derivative(double t, const Vector& y) { return -(pg_ * select(t, y)); }

  std::size_t last_inside() const noexcept { return inside_.size(); }
  int last_sweeps() const noexcept { return last_sweeps_; }
  long fallbacks() const noexcept { return qp_->fallbacks(); }

private:
  const FlowSpec* spec_;
  double h_;
  Eigen::Index edge_vars_ = 0;
  Eigen::Index agent_vars_ = 0;
  Matrix g_;
  Matrix pg_;
  Matrix k_;
  std::optional<ActiveSetBoxQp> qp_;
  Vector psi_;
  std::vector<Eigen::Index> inside_;
  int last_sweeps_ = 0;
};

} // namespace ftsolve
