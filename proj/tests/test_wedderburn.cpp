#include <algorithm>

#include <gtest/gtest.h>

#include "opdiag/fixtures.hpp"
#include "opdiag/opdiag.hpp"

using namespace opdiag;

namespace {

const ToleranceConfig cfg{};

std::vector<Index> sorted_desc(std::vector<Index> v) {
  std::sort(v.rbegin(), v.rend());
  return v;
}

}  // namespace

TEST(InvariantProjection, FullAlgebraIrreducible) {
  EXPECT_TRUE(invariant_projection(fixtures::full_matrix_algebra(3, cfg), cfg).irreducible);
}

TEST(InvariantProjection, ReducibleSemisimple) {
  const auto f = fixtures::semisimple_corpus(12, 37, cfg);
  for (const auto& x : f) {
    if (x.block_sizes.size() < 2) continue;
    const auto p = invariant_projection(x.algebra, cfg);
    ASSERT_FALSE(p.irreducible) << x.name;
    EXPECT_LT(p.invariance_residual, 1e-8) << x.name;
    EXPECT_LT((p.p * p.p - p.p).norm(), 1e-10);
    EXPECT_LT((p.p - p.p.adjoint()).norm(), 1e-10);
    EXPECT_GT(p.range.cols(), 0);
    EXPECT_LT(p.range.cols(), x.algebra.ambient_dim());
  }
}

TEST(InvariantProjection, UpperTriangularHasScalarCommutant) {
  try {
    invariant_projection(fixtures::upper_triangular(3, cfg), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoNonScalarCommutant);
  }
}

TEST(Decompose, MatrixAlgebraIsOneBlock) {
  for (Index n = 1; n <= 4; ++n) {
    const auto r = decompose(fixtures::full_matrix_algebra(n, cfg), std::nullopt, cfg);
    EXPECT_EQ(r.block_sizes, std::vector<Index>{n});
    EXPECT_TRUE(r.burnside_ok());
  }
}

TEST(Decompose, ScalarsSplitIntoOnes) {
  const auto r = decompose(fixtures::scalars(3, cfg), std::nullopt, cfg);
  EXPECT_EQ(r.block_sizes, (std::vector<Index>{1, 1, 1}));
  EXPECT_EQ(r.signature, std::vector<Index>{1});
}

TEST(Decompose, RecoversCorpusBlocks) {
  for (const auto& f : fixtures::semisimple_corpus(15, 23, cfg)) {
    const auto r = decompose(f.algebra, f.diagonal, cfg);
    EXPECT_EQ(sorted_desc(r.block_sizes), sorted_desc(f.block_sizes)) << f.name;
    EXPECT_EQ(r.signature, sorted_desc(f.signature)) << f.name;
    EXPECT_TRUE(r.burnside_ok()) << f.name;
    EXPECT_LT(r.off_block_residual, 1e-8) << f.name;
    for (double s : r.split_residuals) EXPECT_LT(s, 1e-8) << f.name;
    for (double w : r.witness_residuals) EXPECT_LT(w, 1e-8) << f.name;
  }
}

TEST(Decompose, WithoutDiagonalAgrees) {
  for (const auto& f : fixtures::semisimple_corpus(8, 29, cfg)) {
    const auto with = decompose(f.algebra, f.diagonal, cfg);
    const auto without = decompose(f.algebra, std::nullopt, cfg);
    EXPECT_EQ(sorted_desc(with.block_sizes), sorted_desc(without.block_sizes)) << f.name;
    EXPECT_TRUE(without.witness_residuals.empty());
  }
}

TEST(Decompose, ConjugatorBlockDiagonalises) {
  const auto f = fixtures::semisimple_corpus(1, 31, cfg).front();
  const auto r = decompose(f.algebra, f.diagonal, cfg);
  const CMatrix t_inv = r.conjugator.inverse();
  const auto off = detail::block_offsets(r.block_sizes);
  for (const auto& e : f.algebra.basis()) {
    CMatrix c = r.conjugator * e * t_inv;
    for (std::size_t i = 0; i < r.block_sizes.size(); ++i)
      c.block(off[i], off[i], r.block_sizes[i], r.block_sizes[i]).setZero();
    EXPECT_LT(c.norm(), 1e-8 * e.norm() * r.conjugator_condition);
  }
}

TEST(Decompose, MultiplicityClassesShareSize) {
  // M_2 (x) I_2 is a single summand repeated twice
  std::vector<CMatrix> g;
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j) g.push_back(kron(identity(2), matrix_unit(2, i, j)));
  const auto a = generate_algebra(4, g, cfg);
  const auto r = decompose(a, std::nullopt, cfg);
  EXPECT_EQ(r.block_sizes, (std::vector<Index>{2, 2}));
  EXPECT_EQ(r.signature, std::vector<Index>{2});
  ASSERT_EQ(r.classes.size(), 1u);
  EXPECT_EQ(r.classes[0].blocks.size(), 2u);
}

TEST(Decompose, NonsemisimpleFails) {
  for (const auto& f : fixtures::nonsemisimple_corpus(3, cfg)) {
    EXPECT_THROW(decompose(f.algebra, std::nullopt, cfg), Error) << f.name;
  }
}

TEST(Decompose, InvalidDiagonalRejected) {
  const auto a = fixtures::full_matrix_algebra(2, cfg);
  try {
    decompose(a, unit_tensor(2), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DiagonalInvalid);
  }
}

TEST(SplitStep, ConjugationPropertiesHold) {
  std::mt19937_64 rng(4);
  const auto t = fixtures::random_invertible(3, 10.0, rng);
  auto a = fixtures::conjugate(fixtures::direct_sum(fixtures::full_matrix_algebra(2, cfg), fixtures::scalars(1, cfg), cfg),
                               t, cfg);
  const auto p = invariant_projection(a, cfg);
  ASSERT_FALSE(p.irreducible);
  const auto s = split_step(a, nullptr, p.range, cfg);
  EXPECT_LT(s.x_squared, 1e-10);
  EXPECT_LT(s.inverse_residual, 1e-10);
  EXPECT_LT(s.commutation_residual, 1e-8);
  EXPECT_EQ(s.a_new.dim(), a.dim());
}
