#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ftsolve/linalg.hpp"

namespace ftsolve {

/// yes: every off-basis reduced cost is positive. no: a zero reduced cost admits a
/// nondegenerate pivot to a different optimum. unknown: only degenerate zero-cost pivots.
enum class Uniqueness { yes, no, unknown };
enum class OracleMethod { simplex, vertex_enum };

inline const char* to_string(Uniqueness u) {
  switch (u) {
    case Uniqueness::yes: return "yes";
    case Uniqueness::no: return "no";
    case Uniqueness::unknown: return "unknown";
  }
  return "?";
}

inline const char* to_string(OracleMethod m) { return m == OracleMethod::simplex ? "simplex" : "vertex_enum"; }

/// A minimum-l1 solution of Ax = b with how it was obtained.
struct L1Certificate {
  Vector x_star;
  double optimal_value = 0.0;
  Uniqueness unique = Uniqueness::unknown;
  OracleMethod method = OracleMethod::simplex;
  /// Simplex only: y with A'y = phi, |phi|_inf <= 1 and phi'x* = |x*|_1.
  Vector dual_y;
  Vector dual_phi;
  long pivots = 0;
  bool perturbed = false;
};

/// Optimality conditions of a certificate. Feasibility and complementarity are
/// relative to max(1, |x*|_1), since both inherit the magnitude of x*.
struct CertificateCheck {
  double feasibility = 0.0;     ///< |A x* - b|_inf / max(1, |x*|_1)
  double dual_bound = 0.0;      ///< max(0, |phi|_inf - 1)
  double dual_range = 0.0;      ///< |A'y - phi|_inf
  double complementarity = 0.0; ///< |phi'x* - |x*|_1| / max(1, |x*|_1)
  bool ok(double tol) const {
    return feasibility <= tol && dual_bound <= tol && dual_range <= tol && complementarity <= tol;
  }
};

/// Recomputes the optimality conditions of a simplex certificate from scratch.
inline CertificateCheck verify_certificate(const Matrix& a, const Vector& b, const L1Certificate& cert) {
  CertificateCheck c;
  const double scale = std::max(1.0, cert.x_star.lpNorm<1>());
  c.feasibility = (a * cert.x_star - b).lpNorm<Eigen::Infinity>() / scale;
  if (cert.dual_phi.size() == cert.x_star.size() && cert.dual_y.size() == a.rows()) {
    c.dual_bound = std::max(0.0, cert.dual_phi.lpNorm<Eigen::Infinity>() - 1.0);
    c.dual_range = (a.transpose() * cert.dual_y - cert.dual_phi).lpNorm<Eigen::Infinity>();
    c.complementarity = std::abs(cert.dual_phi.dot(cert.x_star) - cert.x_star.lpNorm<1>()) / scale;
  } else {
    c.dual_bound = c.dual_range = c.complementarity = INFINITY;
  }
  return c;
}

namespace detail {

struct StallError {};

/// Dense tableau simplex for min c'z, Bz = rhs, z >= 0 with Bland's rule.
class Tableau {
public:
  Tableau(const Matrix& a_eq, const Vector& rhs, double tol, long pivot_cap)
      : rows_(a_eq.rows()), cols_(a_eq.cols()), tol_(tol), cap_(pivot_cap) {
    t_ = Matrix::Zero(rows_ + 1, cols_ + rows_ + 1);
    for (Eigen::Index i = 0; i < rows_; ++i) {
      const double s = rhs(i) < 0.0 ? -1.0 : 1.0;
      t_.row(i).head(cols_) = s * a_eq.row(i);
      t_(i, cols_ + i) = 1.0;
      t_(i, rhs_col()) = s * rhs(i);
      basis_.push_back(cols_ + i);
    }
    active_.assign(static_cast<std::size_t>(rows_), 1);
  }

  Eigen::Index rhs_col() const { return cols_ + rows_; }

  /// Phase 1; returns the remaining infeasibility.
  double phase_one() {
    t_.row(rows_).setZero();
    for (Eigen::Index i = 0; i < rows_; ++i) t_.row(rows_) -= t_.row(i);
    for (Eigen::Index i = 0; i < rows_; ++i) t_(rows_, cols_ + i) = 0.0;
    run(cols_ + rows_);
    return -t_(rows_, rhs_col());
  }

  /// Pivots artificials out of the basis; rows that cannot be cleared are redundant.
  void drive_out_artificials() {
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < cols_) continue;
      Eigen::Index j = 0;
      while (j < cols_ && std::abs(t_(i, j)) <= tol_) ++j;
      if (j < cols_)
        pivot(i, j);
      else
        active_[static_cast<std::size_t>(i)] = 0;
    }
  }

  void phase_two(const Vector& cost) {
    t_.row(rows_).setZero();
    t_.row(rows_).head(cols_) = cost.transpose();
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (!active_[static_cast<std::size_t>(i)]) continue;
      const Eigen::Index bi = basis_[static_cast<std::size_t>(i)];
      if (bi < cols_) t_.row(rows_) -= cost(bi) * t_.row(i);
    }
    run(cols_);
  }

  const std::vector<Eigen::Index>& basis() const { return basis_; }
  const std::vector<char>& active_rows() const { return active_; }
  long pivots() const { return pivots_; }

private:
  void run(Eigen::Index allowed_cols) {
    for (;;) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed_cols; ++j)
        if (t_(rows_, j) < -tol_) {
          enter = j;
          break;
        }
      if (enter < 0) return;
      Eigen::Index leave = -1;
      double best = INFINITY;
      for (Eigen::Index i = 0; i < rows_; ++i) {
        if (!active_[static_cast<std::size_t>(i)] || t_(i, enter) <= tol_) continue;
        const double ratio = t_(i, rhs_col()) / t_(i, enter);
        const bool tie = leave >= 0 && std::abs(ratio - best) <= tol_;
        if (leave < 0 || ratio < best - tol_ ||
            (tie && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          best = leave < 0 ? ratio : std::min(best, ratio);
          leave = i;
        }
      }
      if (leave < 0) throw InternalError("simplex: minimum-l1 LP reported unbounded");
      pivot(leave, enter);
      if (++pivots_ > cap_) throw StallError{};
    }
  }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i <= rows_; ++i)
      if (i != r && t_(i, c) != 0.0) t_.row(i) -= t_(i, c) * t_.row(r);
    basis_[static_cast<std::size_t>(r)] = c;
  }

  Eigen::Index rows_, cols_;
  double tol_;
  long cap_;
  Matrix t_;
  std::vector<Eigen::Index> basis_;
  std::vector<char> active_;
  long pivots_ = 0;
};

struct SimplexOutcome {
  std::vector<Eigen::Index> basis;  // structural columns of [A, -A] for the active rows
  std::vector<Eigen::Index> rows;   // active (non-redundant) rows
  long pivots = 0;
};

inline SimplexOutcome run_simplex(const Matrix& split, const Vector& rhs, long pivot_cap) {
  const double scale = std::max({1.0, split.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff()});
  Tableau tab(split, rhs, 1e-11 * scale, pivot_cap);
  const double infeasibility = tab.phase_one();
  if (infeasibility > 1e-9 * scale) throw InfeasibleError("Ax = b is inconsistent (phase-1 residual " + std::to_string(infeasibility) + ")");
  tab.drive_out_artificials();
  tab.phase_two(Vector::Ones(split.cols()));
  SimplexOutcome out;
  for (std::size_t i = 0; i < tab.basis().size(); ++i)
    if (tab.active_rows()[i]) {
      out.basis.push_back(tab.basis()[i]);
      out.rows.push_back(static_cast<Eigen::Index>(i));
    }
  out.pivots = tab.pivots();
  return out;
}

} // namespace detail

/// Minimum-l1 solution via the LP  min 1'(u+v)  s.t.  A(u - v) = b, u, v >= 0.
///
/// Primal simplex with Bland's rule on a dense tableau. The final basis is
/// re-solved against the original data for the primal point and the duals;
/// phi = A'y is the optimality certificate. If pivoting stalls past 10^4
/// pivots the LP is re-solved with a perturbed right-hand side and the basis
/// found there is re-used for the true one.
inline L1Certificate min_l1_lp(const Matrix& a, const Vector& b) {
  require_finite(a, "A");
  require_finite(b, "b");
  if (b.size() != a.rows()) throw InputError("b has length " + std::to_string(b.size()) + ", expected " + std::to_string(a.rows()));
  if (a.rows() == 0 || a.cols() == 0) throw InputError("empty system");
  const Eigen::Index m = a.rows(), n = a.cols();
  Matrix split(m, 2 * n);
  split << a, -a;

  L1Certificate cert;
  cert.method = OracleMethod::simplex;
  detail::SimplexOutcome res;
  try {
    res = detail::run_simplex(split, b, 10000);
  } catch (const detail::StallError&) {
    Vector bp = b;
    const double mag = 1e-7 * std::max(1.0, b.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < m; ++i) bp(i) += mag * std::pow(0.5, static_cast<double>(i));
    try {
      res = detail::run_simplex(split, bp, 100000);
    } catch (const detail::StallError&) {
      throw InternalError("simplex stalled even after perturbation");
    }
    cert.perturbed = true;
  }
  cert.pivots = res.pivots;

  const auto r = static_cast<Eigen::Index>(res.rows.size());
  Matrix bmat(r, r);
  Vector rhs(r), cb(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index k = 0; k < r; ++k) bmat(i, k) = split(res.rows[static_cast<std::size_t>(i)], res.basis[static_cast<std::size_t>(k)]);
    rhs(i) = b(res.rows[static_cast<std::size_t>(i)]);
    cb(i) = 1.0;
  }
  Eigen::FullPivLU<Matrix> lu(bmat);
  if (!lu.isInvertible()) throw InternalError("simplex ended on a singular basis");
  const Vector xb = lu.solve(rhs);
  const Vector y_rows = lu.transpose().solve(cb);

  Vector z = Vector::Zero(2 * n);
  for (Eigen::Index k = 0; k < r; ++k) z(res.basis[static_cast<std::size_t>(k)]) = xb(k);
  if (z.minCoeff() < -1e-9 * std::max(1.0, xb.cwiseAbs().maxCoeff()))
    throw InternalError("simplex basis is not primal feasible for the unperturbed right-hand side");
  cert.x_star = z.head(n) - z.tail(n);
  cert.optimal_value = cert.x_star.lpNorm<1>();
  cert.dual_y = Vector::Zero(m);
  for (Eigen::Index i = 0; i < r; ++i) cert.dual_y(res.rows[static_cast<std::size_t>(i)]) = y_rows(i);
  cert.dual_phi = a.transpose() * cert.dual_y;

  // reduced costs 1 - phi_k (u_k) and 1 + phi_k (v_k); all strictly positive off the basis => unique
  std::vector<char> in_basis(static_cast<std::size_t>(2 * n), 0);
  for (auto j : res.basis) in_basis[static_cast<std::size_t>(j)] = 1;
  // a zero reduced cost whose ratio test gives a positive step reaches a different optimal x
  bool strict = true, alternative = false;
  const double step_tol = 1e-9 * std::max(1.0, xb.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < 2 * n; ++j) {
    if (in_basis[static_cast<std::size_t>(j)]) continue;
    const double rc = j < n ? 1.0 - cert.dual_phi(j) : 1.0 + cert.dual_phi(j - n);
    if (rc < -1e-8) throw InternalError("simplex ended with a negative reduced cost");
    if (rc > 1e-9) continue;
    strict = false;
    Vector col(r);
    for (Eigen::Index i = 0; i < r; ++i) col(i) = split(res.rows[static_cast<std::size_t>(i)], j);
    const Vector d = lu.solve(col);
    double theta = INFINITY;
    for (Eigen::Index i = 0; i < r; ++i)
      if (d(i) > 1e-12) theta = std::min(theta, std::max(0.0, xb(i)) / d(i));
    if (theta > step_tol) alternative = true;
  }
  cert.unique = strict ? Uniqueness::yes : (alternative ? Uniqueness::no : Uniqueness::unknown);
  return cert;
}

/// Brute force over all basic solutions; only for small column counts.
///
/// Every square nonsingular column subset A_S gives x_S = A_S^{-1} b. The
/// l1-smallest is returned; distinct minimizers are reported as unique = no
/// and the lexicographically smallest one is kept.
inline L1Certificate vertex_enum_oracle(const Matrix& a, const Vector& b) {
  require_finite(a, "A");
  require_finite(b, "b");
  if (b.size() != a.rows()) throw InputError("b has length " + std::to_string(b.size()) + ", expected " + std::to_string(a.rows()));
  if (a.cols() > 20) throw InputError("vertex enumeration limited to 20 columns, got " + std::to_string(a.cols()));
  if (!has_full_row_rank(a)) throw SingularityError("vertex enumeration needs a full-row-rank A");
  const Eigen::Index m = a.rows(), n = a.cols();
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());

  std::vector<Vector> best;
  double best_value = INFINITY;
  std::vector<Eigen::Index> pick(static_cast<std::size_t>(m));
  std::iota(pick.begin(), pick.end(), 0);
  for (;;) {
    Matrix as(m, m);
    for (Eigen::Index k = 0; k < m; ++k) as.col(k) = a.col(pick[static_cast<std::size_t>(k)]);
    Eigen::FullPivLU<Matrix> lu(as);
    lu.setThreshold(1e-12);
    if (lu.isInvertible()) {
      const Vector xs = lu.solve(b);
      if ((as * xs - b).lpNorm<Eigen::Infinity>() <= 1e-9 * scale) {
        Vector x = Vector::Zero(n);
        for (Eigen::Index k = 0; k < m; ++k) x(pick[static_cast<std::size_t>(k)]) = xs(k);
        const double v = x.lpNorm<1>();
        const double tie = 1e-9 * std::max(1.0, best_value == INFINITY ? v : best_value);
        if (v < best_value - tie) {
          best_value = v;
          best.assign(1, x);
        } else if (v <= best_value + tie) {
          const bool dup = std::any_of(best.begin(), best.end(), [&](const Vector& o) {
            return (o - x).lpNorm<Eigen::Infinity>() <= 1e-9 * scale;
          });
          if (!dup) best.push_back(x);
          best_value = std::min(best_value, v);
        }
      }
    }
    // next m-subset of {0..n-1} in lexicographic order
    Eigen::Index k = m - 1;
    while (k >= 0 && pick[static_cast<std::size_t>(k)] == n - m + k) --k;
    if (k < 0) break;
    ++pick[static_cast<std::size_t>(k)];
    for (Eigen::Index l = k + 1; l < m; ++l) pick[static_cast<std::size_t>(l)] = pick[static_cast<std::size_t>(l - 1)] + 1;
  }
  if (best.empty()) throw InternalError("full-row-rank A has no basic solution");

  L1Certificate cert;
  cert.method = OracleMethod::vertex_enum;
  cert.x_star = *std::min_element(best.begin(), best.end(), [](const Vector& l, const Vector& r) {
    return std::lexicographical_compare(l.begin(), l.end(), r.begin(), r.end());
  });
  cert.optimal_value = cert.x_star.lpNorm<1>();
  cert.unique = best.size() == 1 ? Uniqueness::yes : Uniqueness::no;
  return cert;
}

/// Minimum-Euclidean-norm solution, a reference point for residual checks.
inline Vector any_solution(const Matrix& a, const Vector& b) { return min_norm_solution(a, b); }

} // namespace ftsolve
