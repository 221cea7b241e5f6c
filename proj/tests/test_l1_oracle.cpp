#include <gtest/gtest.h>

#include <random>

#include "ftsolve/fixture.hpp"
#include "ftsolve/l1_oracle.hpp"

using namespace ftsolve;

namespace {

// Brute-force l1 minimum over basic solutions, written separately from the library's enumeration:
// bitmask over columns, keep square nonsingular subsets of size rank(A).
double brute_force_min_l1(const Matrix& a, const Vector& b) {
  const auto m = a.rows(), n = a.cols();
  double best = INFINITY;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != m) continue;
    Matrix sub(m, m);
    std::vector<Eigen::Index> cols;
    for (Eigen::Index c = 0; c < n; ++c)
      if (mask & (1u << c)) cols.push_back(c);
    for (Eigen::Index k = 0; k < m; ++k) sub.col(k) = a.col(cols[static_cast<std::size_t>(k)]);
    Eigen::FullPivLU<Matrix> lu(sub);
    if (lu.rank() < m) continue;
    best = std::min(best, lu.solve(b).lpNorm<1>());
  }
  return best;
}

Matrix mat(Eigen::Index r, Eigen::Index c, std::initializer_list<double> v) {
  Matrix m(r, c);
  auto it = v.begin();
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = *it++;
  return m;
}

Vector vec(std::initializer_list<double> v) { return mat(static_cast<Eigen::Index>(v.size()), 1, v); }

} // namespace

TEST(MinL1Lp, Identity) {
  const auto c = min_l1_lp(Matrix::Identity(2, 2), vec({3, -4}));
  EXPECT_NEAR(c.x_star(0), 3, 1e-12);
  EXPECT_NEAR(c.x_star(1), -4, 1e-12);
  EXPECT_NEAR(c.optimal_value, 7, 1e-12);
  EXPECT_EQ(c.unique, Uniqueness::yes);
}

TEST(MinL1Lp, SingleRow) {
  const auto c = min_l1_lp(mat(1, 2, {2, 1}), vec({2}));
  EXPECT_NEAR(c.x_star(0), 1, 1e-12);
  EXPECT_NEAR(c.x_star(1), 0, 1e-12);
  EXPECT_NEAR(c.optimal_value, 1, 1e-12);
  EXPECT_TRUE(verify_certificate(mat(1, 2, {2, 1}), vec({2}), c).ok(1e-10));
}

TEST(MinL1Lp, TieIsReportedNotUnique) {
  const auto c = min_l1_lp(mat(1, 2, {1, 1}), vec({1}));
  EXPECT_NEAR(c.optimal_value, 1, 1e-12);
  EXPECT_EQ(c.unique, Uniqueness::no);
}

TEST(MinL1Lp, InconsistentSystemThrows) {
  EXPECT_THROW(min_l1_lp(mat(2, 2, {1, 1, 1, 1}), vec({1, 2})), InfeasibleError);
  EXPECT_THROW(min_l1_lp(mat(1, 2, {1, 1}), vec({1, 2})), InputError);
}

TEST(VertexEnum, Examples) {
  auto c = vertex_enum_oracle(mat(1, 2, {1, 1}), vec({1}));
  EXPECT_NEAR(c.optimal_value, 1, 1e-12);
  EXPECT_EQ(c.unique, Uniqueness::no);
  c = vertex_enum_oracle(mat(1, 2, {2, 1}), vec({2}));
  EXPECT_NEAR(c.x_star(0), 1, 1e-12);
  EXPECT_NEAR(c.x_star(1), 0, 1e-12);
  EXPECT_EQ(c.method, OracleMethod::vertex_enum);
  EXPECT_THROW(vertex_enum_oracle(Matrix::Ones(1, 21), vec({1})), InputError);
}

TEST(Oracles, FixtureValuesAgree) {
  const auto fx = fixture_paper_4agent();
  const Matrix& a = fx.system.stacked_a();
  const Vector& b = fx.system.stacked_b();
  const auto lp = min_l1_lp(a, b);
  const auto ve = vertex_enum_oracle(a, b);
  EXPECT_NEAR(lp.optimal_value, ve.optimal_value, 1e-8);
  EXPECT_NEAR(lp.optimal_value, brute_force_min_l1(a, b), 1e-8);
  EXPECT_TRUE(verify_certificate(a, b, lp).ok(1e-8));
  EXPECT_LE((a * any_solution(a, b) - b).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Oracles, RandomSystemsAgreeWithBruteForce) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  for (int seed = 0; seed < 100; ++seed) {
    const Eigen::Index m = 2 + seed % 3, n = 4 + seed % 5;
    const Matrix a = Matrix::NullaryExpr(m, n, [&] { return nd(rng); });
    const Vector b = Vector::NullaryExpr(m, [&] { return nd(rng); });
    const auto lp = min_l1_lp(a, b);
    const double oracle = brute_force_min_l1(a, b);
    EXPECT_NEAR(lp.optimal_value, oracle, 1e-8 * std::max(1.0, oracle));
    EXPECT_NEAR(vertex_enum_oracle(a, b).optimal_value, oracle, 1e-8 * std::max(1.0, oracle));
    EXPECT_TRUE(verify_certificate(a, b, lp).ok(1e-8));
  }
}

TEST(Oracles, DegenerateRightHandSide) {
  // b = 0 forces x = 0 through many degenerate pivots
  const Matrix a = mat(2, 4, {1, 2, 3, 4, 2, 1, 0, 1});
  const auto lp = min_l1_lp(a, Vector::Zero(2));
  EXPECT_NEAR(lp.optimal_value, 0.0, 1e-12);
  EXPECT_TRUE(verify_certificate(a, Vector::Zero(2), lp).ok(1e-10));
}

TEST(AnySolution, Examples) {
  const Vector x = any_solution(Matrix::Identity(2, 2), vec({3, -4}));
  EXPECT_NEAR(x(0), 3, 1e-15);
  EXPECT_NEAR(x(1), -4, 1e-15);
  const Vector y = any_solution(mat(1, 2, {1, 1}), vec({2}));
  EXPECT_NEAR(y(0), 1, 1e-15);
  EXPECT_NEAR(y(1), 1, 1e-15);
}
