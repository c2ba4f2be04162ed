#include <gtest/gtest.h>

#include "opdiag/opdiag.hpp"

using namespace opdiag;

namespace {

const ToleranceConfig cfg{};

TensorElement random_tensor(Index n, Index r, std::mt19937_64& rng) {
  TensorElement u(n);
  for (Index i = 0; i < r; ++i) u.add(random_matrix(n, n, rng), random_matrix(n, n, rng));
  return u;
}

}  // namespace

TEST(Haagerup, CanonicalDiagonalIsOne) {
  for (Index n = 2; n <= 4; ++n) {
    const auto u = canonical_diagonal(n);
    EXPECT_GE(haagerup_lower(u, cfg), 1.0 - 1e-9);
    const auto est = haagerup_upper(u, cfg);
    EXPECT_LE(est.upper, 1.0 + 1e-6);
    EXPECT_TRUE(est.converged);
  }
}

TEST(Haagerup, ElementaryTensorIsProductOfNorms) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const CMatrix a = random_matrix(3, 3, rng), b = random_matrix(3, 3, rng);
    TensorElement u(3);
    u.add(a, b);
    const double expect = op_norm(a) * op_norm(b);
    EXPECT_NEAR(haagerup_lower(u, cfg), expect, 1e-10 * expect);
    EXPECT_NEAR(haagerup_upper(u, cfg).upper, expect, 1e-6 * expect);
    EXPECT_NEAR(projective_upper(u, cfg).upper, expect, 1e-6 * expect);
  }
}

TEST(Haagerup, DiagonalUnitsSumToOne) {
  TensorElement u(3);
  for (Index i = 0; i < 3; ++i) u.add(matrix_unit(3, i, i), matrix_unit(3, i, i));
  EXPECT_NEAR(haagerup_lower(u, cfg), 1.0, 1e-12);
  EXPECT_NEAR(haagerup_upper(u, cfg).upper, 1.0, 1e-6);
}

TEST(Haagerup, FlipTensorIsDimension) {
  // sum_ij E_ij (x) E_ji multiplies to n 1, and both row and column sums are n 1
  for (Index n = 2; n <= 3; ++n) {
    TensorElement u(n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) u.add(matrix_unit(n, i, j), matrix_unit(n, j, i));
    const double d = static_cast<double>(n);
    EXPECT_NEAR(haagerup_lower(u, cfg), d, 1e-12);
    EXPECT_NEAR(haagerup_eval(u), d, 1e-12);
    EXPECT_NEAR(haagerup_upper(u, cfg).upper, d, 1e-6 * d);
    const double p = projective_upper(u, cfg).upper;
    EXPECT_GE(p, d - 1e-9);
    EXPECT_LE(p, d * d + 1e-9);
  }
}

TEST(Haagerup, BracketOrderedOnRandomTensors) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto u = random_tensor(3, 4, rng);
    const double lo = haagerup_lower(u, cfg);
    const auto hi = haagerup_upper(u, cfg);
    EXPECT_LE(lo, hi.upper + 1e-6);
    EXPECT_LE(hi.upper, haagerup_eval(u) + 1e-9);
    EXPECT_LT(tensor_distance(hi.achieving_rep, u), 1e-9 * (1.0 + ambient_coefficients(u).norm()));
    EXPECT_NEAR(haagerup_eval(hi.achieving_rep), hi.upper, 1e-12 * hi.upper);
  }
}

TEST(Haagerup, HomogeneousAndInvariant) {
  std::mt19937_64 rng(3);
  const auto u = random_tensor(3, 3, rng);
  const cplx lambda(1.7, -0.9);
  const double h = haagerup_upper(u, cfg).upper;
  EXPECT_NEAR(haagerup_upper(u.scaled(lambda), cfg).upper, std::abs(lambda) * h, 1e-9 * std::abs(lambda) * h);
  EXPECT_NEAR(haagerup_lower(u.scaled(lambda), cfg), std::abs(lambda) * haagerup_lower(u, cfg), 1e-12 * h);
  const CMatrix s = random_matrix(3, 3, rng) + 3.0 * identity(3);
  const auto v = reparametrize(u, s);
  EXPECT_LT(tensor_distance(u, v), 1e-10 * ambient_coefficients(u).norm());
  EXPECT_NEAR(haagerup_upper(v, cfg).upper, h, 1e-6 * h);
}

TEST(Haagerup, ZeroTensor) {
  TensorElement u(2);
  u.add(CMatrix::Zero(2, 2), identity(2));
  EXPECT_EQ(haagerup_lower(u, cfg), 0.0);
  EXPECT_EQ(haagerup_upper(u, cfg).upper, 0.0);
  EXPECT_EQ(projective_upper(u, cfg).upper, 0.0);
}

TEST(Projective, DominatesHaagerup) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 6; ++trial) {
    const auto u = random_tensor(3, 3, rng);
    const auto p = projective_upper(u, cfg);
    EXPECT_LE(haagerup_upper(u, cfg).upper, p.upper + 1e-9);
    EXPECT_LE(p.upper, projective_eval(u) + 1e-9);
    EXPECT_LT(tensor_distance(p.achieving_rep, u), 1e-9 * (1.0 + ambient_coefficients(u).norm()));
  }
}

TEST(Projective, CanonicalDiagonal) {
  for (Index n = 2; n <= 3; ++n) EXPECT_NEAR(projective_upper(canonical_diagonal(n), cfg).upper, n, 1e-6);
}

TEST(Eval, ReparametrizeKeepsTensor) {
  std::mt19937_64 rng(5);
  const auto u = random_tensor(2, 3, rng);
  const auto v = reparametrize(u, random_matrix(3, 3, rng));
  EXPECT_LT(tensor_distance(u, v), 1e-10 * ambient_coefficients(u).norm());
}
