#include <gtest/gtest.h>

#include "opdiag/fixtures.hpp"
#include "opdiag/opdiag.hpp"

using namespace opdiag;

namespace {

const ToleranceConfig cfg{};

}  // namespace

TEST(Generate, FullMatrixAlgebraFromTwoUnits) {
  for (Index n = 2; n <= 5; ++n) {
    std::vector<CMatrix> g;
    for (Index i = 0; i + 1 < n; ++i) {
      g.push_back(matrix_unit(n, i, i + 1));
      g.push_back(matrix_unit(n, i + 1, i));
    }
    const auto a = generate_algebra(n, g, cfg);
    EXPECT_EQ(a.dim(), n * n);
    EXPECT_TRUE(check_algebra(a, cfg).ok);
  }
}

TEST(Generate, UpperTriangularDimension) {
  for (Index n = 2; n <= 4; ++n) {
    const auto a = fixtures::upper_triangular(n, cfg);
    EXPECT_EQ(a.dim(), n * (n + 1) / 2);
    EXPECT_TRUE(check_algebra(a, cfg).ok);
  }
}

TEST(Generate, NoGeneratorsGivesScalars) {
  const auto a = generate_algebra(3, std::vector<CMatrix>{}, cfg);
  EXPECT_EQ(a.dim(), 1);
  EXPECT_TRUE(membership(a, identity(3) * 2.5, cfg).member());
}

TEST(Generate, RejectsNonSquare) {
  std::vector<CMatrix> g{CMatrix::Zero(2, 3)};
  EXPECT_THROW(
      {
        try {
          generate_algebra(2, g, cfg);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), Errc::NonSquareInput);
          throw;
        }
      },
      Error);
}

TEST(Generate, RejectsWrongSize) {
  std::vector<CMatrix> g{CMatrix::Zero(3, 3)};
  try {
    generate_algebra(2, g, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(Generate, NonUnitalWithoutIdentity) {
  std::vector<CMatrix> g{matrix_unit(2, 0, 1)};
  try {
    generate_algebra(2, std::span<const CMatrix>(g), false, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotUnital);
  }
}

TEST(Membership, InAndOut) {
  const auto t = fixtures::upper_triangular(3, cfg);
  CMatrix x = CMatrix::Zero(3, 3);
  x(0, 2) = cplx(1, 2);
  x(1, 1) = 3;
  const auto in = membership(t, x, cfg);
  ASSERT_TRUE(in.member());
  EXPECT_LT((t.element(*in.coefficients) - x).norm(), 1e-12);
  const auto out = membership(t, matrix_unit(3, 2, 0), cfg);
  EXPECT_FALSE(out.member());
  EXPECT_NEAR(out.residual, 1.0, 1e-12);
}

TEST(Commutant, OfFullIsScalars) {
  EXPECT_EQ(commutant(fixtures::full_matrix_algebra(3, cfg), cfg).dim(), 1);
}

TEST(Commutant, OfScalarsIsEverything) {
  EXPECT_EQ(commutant(fixtures::scalars(3, cfg), cfg).dim(), 9);
}

TEST(Commutant, OfDirectSumWithMultiplicity) {
  // M_2 (x) I_2 has commutant I_2 (x) M_2
  std::vector<CMatrix> g;
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j) g.push_back(kron(matrix_unit(2, i, j), identity(2)));
  const auto a = generate_algebra(4, g, cfg);
  EXPECT_EQ(a.dim(), 4);
  const auto c = commutant(a, cfg);
  EXPECT_EQ(c.dim(), 4);
  for (const auto& x : c.basis())
    for (const auto& y : a.basis()) EXPECT_LT((x * y - y * x).norm(), 1e-10);
}

TEST(Structure, RegularRepresentationOfM2) {
  const auto a = fixtures::full_matrix_algebra(2, cfg);
  // abstract table for the basis of matrix units, unit = E11 + E22 is not a basis
  // element, so rebuild in the basis {1, E12, E21, E11 - E22}
  std::vector<CMatrix> b{identity(2), matrix_unit(2, 0, 1), matrix_unit(2, 1, 0),
                         matrix_unit(2, 0, 0) - matrix_unit(2, 1, 1)};
  CMatrix frame(4, 4);
  for (Index i = 0; i < 4; ++i) frame.col(i) = vec(b[static_cast<std::size_t>(i)]);
  const CMatrix inv = frame.inverse();
  StructureConstants sc;
  sc.dim = 4;
  sc.table.assign(64, 0.0);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) {
      const CVector c = inv * vec(b[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(j)]);
      for (Index k = 0; k < 4; ++k) sc(i, j, k) = c(k);
    }
  const auto chk = check_structure(sc);
  EXPECT_LT(chk.associativity_residual, 1e-12);
  EXPECT_LT(chk.unit_residual, 1e-12);
  const auto rep = left_regular_representation(sc, cfg);
  EXPECT_EQ(rep.dim(), 4);
  EXPECT_TRUE(check_algebra(rep, cfg).ok);
  EXPECT_EQ(commutant(rep, cfg).dim(), 4);
  EXPECT_EQ(a.dim(), 4);
}

TEST(Structure, NonAssociativeRejected) {
  StructureConstants sc;
  sc.dim = 2;
  sc.table.assign(8, 0.0);
  sc(0, 0, 0) = sc(0, 1, 1) = sc(1, 0, 1) = 1.0;
  sc(1, 1, 1) = 1.0;  // e1 e1 = e1 (idempotent): associative
  EXPECT_LT(check_structure(sc).associativity_residual, 1e-12);
  sc(1, 1, 0) = 1.0;  // e1 e1 = e0 + e1: still associative (commutative, 2-dim)
  EXPECT_LT(check_structure(sc).associativity_residual, 1e-12);

  StructureConstants bad;
  bad.dim = 3;
  bad.table.assign(27, 0.0);
  for (Index j = 0; j < 3; ++j) bad(0, j, j) = bad(j, 0, j) = 1.0;
  bad(1, 2, 1) = 1.0;
  bad(2, 1, 2) = 1.0;
  try {
    left_regular_representation(bad, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::AssociativityViolation);
  }
}

TEST(WordBasis, SpansAlgebra) {
  const auto a = fixtures::full_matrix_algebra(3, cfg);
  const auto gens = generating_set(a, cfg);
  EXPECT_LE(gens.size(), 2u);
  const auto wb = word_basis(3, std::span<const CMatrix>(gens), cfg);
  ASSERT_EQ(static_cast<Index>(wb.elements.size()), 9);
  for (std::size_t i = 0; i < wb.elements.size(); ++i)
    for (std::size_t j = 0; j < wb.elements.size(); ++j)
      EXPECT_NEAR(std::abs(vec(wb.elements[i]).dot(vec(wb.elements[j]))), i == j ? 1.0 : 0.0, 1e-10);
}

TEST(RandomElement, InAlgebraAndDeterministic) {
  const auto a = fixtures::upper_triangular(3, cfg);
  auto r1 = make_rng(cfg, 7);
  auto r2 = make_rng(cfg, 7);
  const CMatrix x = random_element(a, r1);
  EXPECT_TRUE(membership(a, x, cfg).member());
  EXPECT_NEAR(x.norm(), 1.0, 1e-12);
  EXPECT_EQ((x - random_element(a, r2)).norm(), 0.0);
}

TEST(Config, RejectsNonPositive) {
  ToleranceConfig c;
  c.rank_tol = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.opt.max_iterations = 0;
  EXPECT_THROW(c.validate(), Error);
}
