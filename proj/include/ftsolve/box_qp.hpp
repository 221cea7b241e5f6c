#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "ftsolve/linalg.hpp"

namespace ftsolve {

struct BoxQpResult {
  Vector x;
  int sweeps = 0;
  bool converged = false;
};

/// Minimizes 0.5 x'Qx - c'x over lo <= x <= hi by projected Gauss-Seidel.
///
/// Q must be symmetric positive semidefinite. Coordinates with a vanishing
/// diagonal have an all-zero row and column (PSD), so they never change the
/// objective and keep their warm-start value. Convergence is measured on the
/// gradient scale: max_j |Q_jj * dx_j| <= tol.
inline BoxQpResult box_qp(const Matrix& q, const Vector& c, const Vector& lo, const Vector& hi, Vector x0,
                          double tol = 1e-14, int max_sweeps = 500) {
  const Eigen::Index n = q.rows();
  BoxQpResult out;
  out.x = std::move(x0);
  if (n == 0) {
    out.converged = true;
    return out;
  }
  for (Eigen::Index j = 0; j < n; ++j) out.x(j) = std::clamp(out.x(j), lo(j), hi(j));

  const double diag_floor = 1e-14 * std::max(1.0, q.diagonal().cwiseAbs().maxCoeff());
  Vector qx = q * out.x;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double change = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = q(j, j);
      if (d <= diag_floor) continue;
      const double g = c(j) - (qx(j) - d * out.x(j));
      const double next = std::clamp(g / d, lo(j), hi(j));
      const double dx = next - out.x(j);
      if (dx != 0.0) {
        qx.noalias() += dx * q.col(j);
        out.x(j) = next;
        change = std::max(change, std::abs(dx) * d);
      }
    }
    out.sweeps = sweep;
    if (change <= tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

/// Primal-dual active-set solver for the same box QP, for repeated solves on
/// sub-blocks of one fixed PSD matrix.
///
/// The free block is regularized to Q_FF + tau*I so every Cholesky exists;
/// that perturbs the stationarity residual by at most tau*|x|. Factors are
/// cached by free set, since consecutive solves during sliding tend to share
/// it. If the active sets cycle, the solve falls back to box_qp.
class ActiveSetBoxQp {
public:
  explicit ActiveSetBoxQp(Matrix q, double tau = 1e-11, std::size_t cache_limit = 256)
      : q_(std::move(q)), tau_(tau * std::max(1.0, q_.diagonal().cwiseAbs().maxCoeff())), limit_(cache_limit) {}

  const Matrix& matrix() const noexcept { return q_; }

  /// Solves over the global index set `idx` with all other coordinates held out
  /// of the problem (their contribution must already be folded into c).
  BoxQpResult solve(const std::vector<Eigen::Index>& idx, const Vector& c, const Vector& lo, const Vector& hi,
                    const Vector& x0, int max_iter = 200, int full_updates = 8) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    BoxQpResult out;
    out.x = x0;
    if (n == 0) {
      out.converged = true;
      return out;
    }
    Matrix qs(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) qs(a, b) = q_(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    for (Eigen::Index j = 0; j < n; ++j) out.x(j) = std::clamp(out.x(j), lo(j), hi(j));

    // state: -1 at lower bound, +1 at upper bound, 0 free
    std::vector<int> state(static_cast<std::size_t>(n), 0);
    Vector lambda = c - qs * out.x;
    auto classify = [&](const Vector& x, const Vector& lam) {
      std::vector<int> next(static_cast<std::size_t>(n), 0);
      for (Eigen::Index j = 0; j < n; ++j) {
        const double d = std::max(qs(j, j), tau_);
        const double trial = x(j) + lam(j) / d;
        if (lo(j) == hi(j))
          next[static_cast<std::size_t>(j)] = -1;
        else if (trial >= hi(j))
          next[static_cast<std::size_t>(j)] = 1;
        else if (trial <= lo(j))
          next[static_cast<std::size_t>(j)] = -1;
      }
      return next;
    };
    state = classify(out.x, lambda);

    for (int it = 1; it <= max_iter; ++it) {
      std::vector<Eigen::Index> free_local;
      std::vector<Eigen::Index> free_global;
      Vector x = out.x;
      for (Eigen::Index j = 0; j < n; ++j) {
        const int st = state[static_cast<std::size_t>(j)];
        if (st == 0) {
          free_local.push_back(j);
          free_global.push_back(idx[static_cast<std::size_t>(j)]);
        } else {
          x(j) = st > 0 ? hi(j) : lo(j);
        }
      }
      if (!free_local.empty()) {
        const auto f = static_cast<Eigen::Index>(free_local.size());
        Vector rhs(f);
        for (Eigen::Index a = 0; a < f; ++a) {
          const Eigen::Index ja = free_local[static_cast<std::size_t>(a)];
          double r = c(ja);
          for (Eigen::Index b = 0; b < n; ++b)
            if (state[static_cast<std::size_t>(b)] != 0) r -= qs(ja, b) * x(b);
          rhs(a) = r;
        }
        const Vector xf = factor(free_global).solve(rhs);
        for (Eigen::Index a = 0; a < f; ++a) x(free_local[static_cast<std::size_t>(a)]) = xf(a);
      }
      lambda = c - qs * x;
      for (Eigen::Index j = 0; j < n; ++j)
        if (state[static_cast<std::size_t>(j)] == 0) lambda(j) = 0.0;
      out.x = x;
      out.sweeps = it;
      auto next = classify(x, lambda);
      if (next == state) {
        out.converged = true;
        return out;
      }
      if (it > full_updates) {
        // past the first few full updates, flip only the worst offender to break cycles
        Eigen::Index worst = -1;
        double worst_v = -1.0;
        for (Eigen::Index j = 0; j < n; ++j) {
          const auto uj = static_cast<std::size_t>(j);
          if (next[uj] == state[uj]) continue;
          const double d = std::max(qs(j, j), tau_);
          const double v = state[uj] == 0 ? std::max(x(j) - hi(j), lo(j) - x(j)) : std::abs(lambda(j)) / d;
          if (v > worst_v) {
            worst_v = v;
            worst = j;
          }
        }
        const auto uw = static_cast<std::size_t>(worst);
        const int target = next[uw];
        next = state;
        next[uw] = target;
      }
      state = next;
    }
    ++fallbacks_;
    Vector x_start = out.x;
    for (Eigen::Index j = 0; j < n; ++j) x_start(j) = std::clamp(x_start(j), lo(j), hi(j));
    auto pgs = box_qp(qs, c, lo, hi, std::move(x_start), 1e-13, 5000);
    pgs.sweeps += max_iter;
    return pgs;
  }

  long fallbacks() const noexcept { return fallbacks_; }

private:
  const Eigen::LLT<Matrix>& factor(const std::vector<Eigen::Index>& free_set) {
    if (auto it = cache_.find(free_set); it != cache_.end()) return it->second;
    if (cache_.size() >= limit_) cache_.clear();
    const auto f = static_cast<Eigen::Index>(free_set.size());
    Matrix sub(f, f);
    for (Eigen::Index a = 0; a < f; ++a)
      for (Eigen::Index b = 0; b < f; ++b) sub(a, b) = q_(free_set[static_cast<std::size_t>(a)], free_set[static_cast<std::size_t>(b)]);
    sub.diagonal().array() += tau_;
    return cache_.emplace(free_set, Eigen::LLT<Matrix>(sub)).first->second;
  }

  Matrix q_;
  double tau_;
  std::size_t limit_;
  std::map<std::vector<Eigen::Index>, Eigen::LLT<Matrix>> cache_;
  long fallbacks_ = 0;
};

} // namespace ftsolve
