#pragma once

#include <string>
#include <utility>

#include "ftsolve/linalg.hpp"

namespace ftsolve {

/// y = col{y_1, ..., y_m}, each y_i in R^n.
class StackedState {
public:
  StackedState() = default;

  StackedState(int agents, Eigen::Index n) : m_(agents), n_(n), data_(Vector::Zero(agents * n)) {
    if (agents < 1 || n < 1) throw InputError("stacked state needs positive agent count and dimension");
  }

  StackedState(int agents, Eigen::Index n, Vector data) : m_(agents), n_(n), data_(std::move(data)) {
    if (agents < 1 || n < 1) throw InputError("stacked state needs positive agent count and dimension");
    if (data_.size() != agents * n)
      throw InputError("stacked state has length " + std::to_string(data_.size()) + ", expected " +
                       std::to_string(agents * n));
    require_finite(data_, "stacked state");
  }

  int agents() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return n_; }
  const Vector& data() const noexcept { return data_; }
  Vector& data() noexcept { return data_; }

  auto block(int i) { return data_.segment(i * n_, n_); }
  auto block(int i) const { return data_.segment(i * n_, n_); }

  friend bool operator==(const StackedState& a, const StackedState& b) {
    return a.m_ == b.m_ && a.n_ == b.n_ && a.data_ == b.data_;
  }

private:
  int m_ = 0;
  Eigen::Index n_ = 0;
  Vector data_;
};

} // namespace ftsolve
