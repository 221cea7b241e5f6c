#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "ftsolve/box_qp.hpp"
#include "ftsolve/linalg.hpp"

namespace ftsolve {

/// Estimate of the admissible limit gain delta < rho / kappa for the distributed l1 flow.
struct DeltaBound {
  bool available = false;
  bool exhaustive = false;
  double rho = 0.0;        ///< estimate of lambda(M), M = Hbar' Pbar Hbar
  double kappa = 0.0;      ///< sum of |(Hbar' Pbar)_ij|, bounding |gamma' Hbar' Pbar eta|
  double delta_max = 0.0;  ///< rho / kappa
  long patterns = 0;       ///< sign patterns evaluated
  long members = 0;        ///< of those, patterns with no selection in ker M
  std::string note;
};

/// min phi'M phi over the Filippov sign box of pattern `sigma`: phi_k = sigma_k
/// where sigma_k != 0, phi_k in [-1, 1] where sigma_k = 0.
inline double sign_box_minimum(ActiveSetBoxQp& qp, const Eigen::VectorXi& sigma) {
  const Matrix& m = qp.matrix();
  const Eigen::Index p = sigma.size();
  Vector fixed = Vector::Zero(p);
  std::vector<Eigen::Index> free;
  for (Eigen::Index k = 0; k < p; ++k) {
    if (sigma(k) == 0)
      free.push_back(k);
    else
      fixed(k) = sigma(k);
  }
  Vector phi = fixed;
  if (!free.empty()) {
    const auto f = static_cast<Eigen::Index>(free.size());
    const Vector mf = m * fixed;
    Vector c(f), lo = Vector::Constant(f, -1.0), hi = Vector::Constant(f, 1.0);
    for (Eigen::Index a = 0; a < f; ++a) c(a) = -mf(free[static_cast<std::size_t>(a)]);
    const auto sol = qp.solve(free, c, lo, hi, Vector::Zero(f));
    for (Eigen::Index a = 0; a < f; ++a) phi(free[static_cast<std::size_t>(a)]) = sol.x(a);
  }
  return phi.dot(m * phi);
}

/// rho estimates lambda(M) = min phi'M phi over selections of sign patterns
/// whose whole Filippov box misses ker M. Patterns are enumerated exhaustively
/// (up to the sign flip, which leaves phi'M phi unchanged) when M has at most
/// 16 rows, otherwise `sample_budget` patterns are drawn with a random zero
/// density per draw. A sampled rho can only overestimate lambda(M).
inline DeltaBound delta_bound_estimate(const Matrix& p_bar, const Matrix& h_bar, long sample_budget = 100000,
                                       std::uint64_t seed = 1) {
  if (p_bar.rows() != h_bar.rows()) throw InputError("Pbar and Hbar row counts differ");
  DeltaBound out;
  if (h_bar.cols() == 0) {
    out.note = "bound unavailable: network has no edges";
    return out;
  }
  const Matrix hp = h_bar.transpose() * p_bar;
  Matrix m = hp * h_bar;
  m = 0.5 * (m + m.transpose());
  const Eigen::Index p = m.rows();
  const double zero_tol = 1e-9 * std::max(1.0, m.cwiseAbs().maxCoeff());
  ActiveSetBoxQp qp(m, 1e-13, 64);

  double rho = INFINITY;
  auto consider = [&](const Eigen::VectorXi& sigma) {
    ++out.patterns;
    const double v = sign_box_minimum(qp, sigma);
    if (v > zero_tol) {
      ++out.members;
      rho = std::min(rho, v);
    }
  };

  Eigen::VectorXi sigma = Eigen::VectorXi::Zero(p);
  if (p <= 16) {
    out.exhaustive = true;
    // odometer over {-1,0,1}^p; keep patterns whose first nonzero entry is +1
    sigma.setConstant(-1);
    for (;;) {
      Eigen::Index first = 0;
      while (first < p && sigma(first) == 0) ++first;
      if (first < p && sigma(first) == 1) consider(sigma);
      Eigen::Index k = 0;
      while (k < p && sigma(k) == 1) sigma(k++) = -1;
      if (k == p) break;
      ++sigma(k);
    }
  } else {
    if (sample_budget < 1) throw InputError("sample budget must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (long s = 0; s < sample_budget; ++s) {
      const double zero_p = u(rng);
      for (Eigen::Index k = 0; k < p; ++k) sigma(k) = u(rng) < zero_p ? 0 : (u(rng) < 0.5 ? -1 : 1);
      consider(sigma);
    }
  }

  out.kappa = hp.cwiseAbs().sum();
  if (out.members == 0 || !(out.kappa > 0.0)) {
    out.note = "bound unavailable: no sampled sign pattern lies in the complement set";
    return out;
  }
  out.available = true;
  out.rho = rho;
  out.delta_max = rho / out.kappa;
  out.note = out.exhaustive ? "estimate (exhaustive enumeration of sign patterns)"
                            : "estimate (sampled sign patterns; rho may overestimate)";
  return out;
}

inline DeltaBound delta_bound_estimate(const PartitionedSystem& sys, const Network& g, long sample_budget = 100000,
                                       std::uint64_t seed = 1) {
  if (!is_connected(g)) throw InputError("network is not connected");
  const auto ex = stack_and_expand(sys, g);
  return delta_bound_estimate(ex.p_bar, ex.h_bar, sample_budget, seed);
}

} // namespace ftsolve
