#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ftsolve/errors.hpp"
#include "ftsolve/graph.hpp"

namespace ftsolve {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline void require_finite(const Eigen::Ref<const Matrix>& m, const std::string& what) {
  if (!m.allFinite()) throw InputError(what + " has non-finite entries");
}

/// Largest row 2-norm; the scale against which rank thresholds are measured.
inline double max_row_norm(const Eigen::Ref<const Matrix>& a) {
  return a.rows() == 0 ? 0.0 : a.rowwise().norm().maxCoeff();
}

/// Numerical rank from a column-pivoted Householder QR, counting |R_kk| > tol * max_row_norm(a).
inline Eigen::Index numerical_rank(const Eigen::Ref<const Matrix>& a, double tol = 1e-10) {
  require_finite(a, "matrix");
  const double scale = max_row_norm(a);
  if (scale == 0.0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  const Matrix& r = qr.matrixQR();
  const Eigen::Index d = std::min(a.rows(), a.cols());
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < d; ++k)
    if (std::abs(r(k, k)) > tol * scale) ++rank;
  return rank;
}

inline bool has_full_row_rank(const Eigen::Ref<const Matrix>& a, double tol = 1e-10) {
  if (a.size() == 0) throw InputError("rank test on an empty matrix");
  return numerical_rank(a, tol) == a.rows();
}

/// Orthogonal projector onto ker A.
///
/// Built as I - A^T (A A^T)^{-1} A with the Gram matrix factored by QR; the
/// result is symmetrized to remove the O(eps) asymmetry the solve leaves.
class Projector {
public:
  Projector() = default;

  explicit Projector(const Matrix& a, const std::string& label = "A") : source_(a) {
    require_finite(a, label);
    if (a.rows() == 0 || a.cols() == 0) throw InputError(label + " is empty");
    if (!has_full_row_rank(a))
      throw SingularityError(label + " (" + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                             ") does not have full row rank");
    const Matrix gram = a * a.transpose();
    Eigen::ColPivHouseholderQR<Matrix> qr(gram);
    const Matrix x = qr.solve(a);
    Matrix p = Matrix::Identity(a.cols(), a.cols()) - a.transpose() * x;
    matrix_ = 0.5 * (p + p.transpose());
  }

  const Matrix& matrix() const noexcept { return matrix_; }
  const Matrix& source() const noexcept { return source_; }
  Eigen::Index dim() const noexcept { return matrix_.rows(); }

  double symmetry_error() const { return (matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff(); }
  double idempotency_error() const { return (matrix_ * matrix_ - matrix_).cwiseAbs().maxCoeff(); }
  double annihilation_error() const { return (source_ * matrix_).cwiseAbs().maxCoeff(); }

private:
  Matrix matrix_;
  Matrix source_;
};

inline Projector kernel_projector(const Matrix& a, const std::string& label = "A") { return Projector(a, label); }

/// Minimum Euclidean-norm solution A^T (A A^T)^{-1} b.
inline Vector min_norm_solution(const Matrix& a, const Vector& b, const std::string& label = "A") {
  require_finite(a, label);
  require_finite(b, label + " right-hand side");
  if (b.size() != a.rows())
    throw InputError(label + ": right-hand side has length " + std::to_string(b.size()) + ", expected " +
                     std::to_string(a.rows()));
  if (!has_full_row_rank(a)) throw SingularityError(label + " does not have full row rank");
  Eigen::ColPivHouseholderQR<Matrix> qr(a * a.transpose());
  return a.transpose() * qr.solve(b);
}

struct InitMode {
  enum class Kind { min_norm, min_norm_plus_kernel };
  Kind kind = Kind::min_norm;
  std::uint64_t seed = 0;
  double scale = 1.0;  ///< kernel perturbation draws entries uniform in [-scale, scale]

  static InitMode min_norm() { return {}; }
  static InitMode with_kernel(std::uint64_t seed, double scale = 1.0) {
    return {Kind::min_norm_plus_kernel, seed, scale};
  }
  friend bool operator==(const InitMode&, const InitMode&) = default;
};

/// A point y0 with A y0 = b; optionally pushed off the minimum-norm point along ker A.
inline Vector feasible_init(const Matrix& a, const Vector& b, const InitMode& mode = {},
                            const std::string& label = "A") {
  Vector y = min_norm_solution(a, b, label);
  if (mode.kind == InitMode::Kind::min_norm_plus_kernel) {
    std::mt19937_64 rng(mode.seed);
    std::uniform_real_distribution<double> u(-mode.scale, mode.scale);
    Vector v(a.cols());
    for (auto& x : v) x = u(rng);
    y += Projector(a, label).matrix() * v;
  }
  return y;
}

/// Per-agent equation block A_i y = b_i.
struct Block {
  Matrix a;
  Vector b;
};

/// The agents' equation blocks and their stacked system; stacked A must have full row rank.
class PartitionedSystem {
public:
  PartitionedSystem() = default;

  explicit PartitionedSystem(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw InputError("system needs at least one agent block");
    n_ = blocks_.front().a.cols();
    if (n_ < 1) throw InputError("solution dimension must be positive");
    Eigen::Index rows = 0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto label = "A_" + std::to_string(i + 1);
      const auto& blk = blocks_[i];
      if (blk.a.rows() < 1) throw InputError(label + " has no rows");
      if (blk.a.cols() != n_)
        throw InputError(label + " has " + std::to_string(blk.a.cols()) + " columns, expected " + std::to_string(n_));
      if (blk.b.size() != blk.a.rows())
        throw InputError("b_" + std::to_string(i + 1) + " has length " + std::to_string(blk.b.size()) +
                         ", expected " + std::to_string(blk.a.rows()));
      require_finite(blk.a, label);
      require_finite(blk.b, "b_" + std::to_string(i + 1));
      rows += blk.a.rows();
    }
    a_.resize(rows, n_);
    b_.resize(rows);
    Eigen::Index r = 0;
    for (const auto& blk : blocks_) {
      a_.middleRows(r, blk.a.rows()) = blk.a;
      b_.segment(r, blk.a.rows()) = blk.b;
      r += blk.a.rows();
    }
    if (!has_full_row_rank(a_)) throw SingularityError("stacked A does not have full row rank");
  }

  int agents() const noexcept { return static_cast<int>(blocks_.size()); }
  Eigen::Index dim() const noexcept { return n_; }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  const Block& block(int i) const { return blocks_.at(static_cast<std::size_t>(i)); }
  const Matrix& stacked_a() const noexcept { return a_; }
  const Vector& stacked_b() const noexcept { return b_; }

  /// The same equations held by a single agent.
  PartitionedSystem merged() const { return PartitionedSystem({Block{a_, b_}}); }

private:
  std::vector<Block> blocks_;
  Eigen::Index n_ = 0;
  Matrix a_;
  Vector b_;
};

/// Block-diagonal projector diag{P_i} and the expanded incidence matrix H kron I_n.
struct Expanded {
  Matrix p_bar;
  Matrix h_bar;
};

inline Matrix kron_identity(const Matrix& h, Eigen::Index n) {
  Matrix out = Matrix::Zero(h.rows() * n, h.cols() * n);
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    for (Eigen::Index k = 0; k < h.cols(); ++k)
      if (h(i, k) != 0.0) out.block(i * n, k * n, n, n).diagonal().setConstant(h(i, k));
  return out;
}

inline Expanded stack_and_expand(const PartitionedSystem& sys, const Network& g) {
  if (g.nodes() != sys.agents())
    throw InputError("network has " + std::to_string(g.nodes()) + " nodes but the system has " +
                     std::to_string(sys.agents()) + " agents");
  const Eigen::Index n = sys.dim();
  Expanded out;
  out.p_bar = Matrix::Zero(n * sys.agents(), n * sys.agents());
  for (int i = 0; i < sys.agents(); ++i)
    out.p_bar.block(i * n, i * n, n, n) = Projector(sys.block(i).a, "A_" + std::to_string(i + 1)).matrix();
  out.h_bar = kron_identity(incidence_matrix(g), n);
  return out;
}

} // namespace ftsolve
