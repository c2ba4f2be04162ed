#ifndef OPDIAG_FIXTURES_HPP
#define OPDIAG_FIXTURES_HPP

// Reproducible test algebras: conjugated direct sums of full matrix
// algebras and a family of algebras with nonzero radical.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "opdiag/cohomology.hpp"

namespace opdiag::fixtures {

/// A simple summand M_size repeated `copies` times along the diagonal.
struct Summand {
  Index size = 1;
  Index copies = 1;
};

struct Fixture {
  std::string name;
  MatrixAlgebra algebra;
  bool semisimple = false;
  std::vector<Index> block_sizes;  ///< expected multiset of blocks
  std::vector<Index> signature;    ///< expected sizes of distinct summands
  std::optional<TensorElement> diagonal;
  CMatrix conjugator;  ///< T with algebra = T^{-1} (block algebra) T
};

inline Index ambient_of(const std::vector<Summand>& s) {
  Index n = 0;
  for (const auto& x : s) n += x.size * x.copies;
  return n;
}

/// Embeds the (i, j) unit of summand `which` into every copy.
inline CMatrix embedded_unit(const std::vector<Summand>& s, std::size_t which, Index i, Index j) {
  const Index n = ambient_of(s);
  CMatrix m = CMatrix::Zero(n, n);
  Index off = 0;
  for (std::size_t t = 0; t < s.size(); ++t) {
    for (Index c = 0; c < s[t].copies; ++c) {
      if (t == which) m(off + i, off + j) = 1.0;
      off += s[t].size;
    }
  }
  return m;
}

/// U diag(sigma) V* with singular values log-uniform in [1, kappa] and both
/// extremes attained, so cond = kappa.
inline CMatrix random_invertible(Index n, double kappa, std::mt19937_64& rng) {
  const CMatrix u = random_unitary(n, rng);
  const CMatrix v = random_unitary(n, rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd s(n);
  for (Index i = 0; i < n; ++i) s(i) = std::pow(kappa, unif(rng));
  if (n >= 2) {
    s(0) = kappa;
    s(n - 1) = 1.0;
  } else {
    s(0) = 1.0;
  }
  return u * s.cast<cplx>().asDiagonal() * v.adjoint();
}

inline MatrixAlgebra conjugate(const MatrixAlgebra& a, const CMatrix& t, const ToleranceConfig& cfg) {
  const CMatrix ti = t.inverse();
  std::vector<CMatrix> mats;
  for (const auto& e : a.basis()) mats.push_back(ti * e * t);
  return span_algebra(a.ambient_dim(), std::span<const CMatrix>(mats), cfg);
}

inline TensorElement conjugate(const TensorElement& u, const CMatrix& t) {
  const CMatrix ti = t.inverse();
  TensorElement out(u.n);
  for (const auto& term : u.terms) out.add(ti * term.a * t, ti * term.b * t);
  return out;
}

/// T^{-1} (sum of summands) T with the sum of the canonical diagonals.
inline Fixture direct_sum(const std::vector<Summand>& s, const CMatrix& t, const ToleranceConfig& cfg) {
  const Index n = ambient_of(s);
  std::vector<CMatrix> units;
  TensorElement u(n);
  Fixture f;
  for (std::size_t w = 0; w < s.size(); ++w) {
    for (Index i = 0; i < s[w].size; ++i) {
      for (Index j = 0; j < s[w].size; ++j) units.push_back(embedded_unit(s, w, i, j));
      u.add(embedded_unit(s, w, i, 0), embedded_unit(s, w, 0, i));
    }
    for (Index c = 0; c < s[w].copies; ++c) f.block_sizes.push_back(s[w].size);
    f.signature.push_back(s[w].size);
  }
  std::sort(f.block_sizes.rbegin(), f.block_sizes.rend());
  std::sort(f.signature.rbegin(), f.signature.rend());
  const MatrixAlgebra base = span_algebra(n, std::span<const CMatrix>(units), cfg);
  f.algebra = conjugate(base, t, cfg);
  f.diagonal = conjugate(u, t);
  f.semisimple = true;
  f.conjugator = t;
  f.name = "sum";
  for (const auto& x : s) f.name += "_" + std::to_string(x.size) + (x.copies > 1 ? "x" + std::to_string(x.copies) : "");
  return f;
}

/// Blocks sizes drawn from 1..4 with sum at most 8 and total algebra
/// dimension at most 20, conjugated by T with cond(T) <= 100.
inline std::vector<Fixture> semisimple_corpus(std::size_t count, std::uint64_t seed, const ToleranceConfig& cfg) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nblocks(1, 4), size(1, 4);
  std::uniform_real_distribution<double> logk(0.0, 2.0);
  std::vector<Fixture> out;
  while (out.size() < count) {
    std::vector<Summand> s;
    const int k = nblocks(rng);
    Index sum = 0, dim = 0;
    for (int i = 0; i < k; ++i) {
      const Index m = size(rng);
      s.push_back({m, 1});
      sum += m;
      dim += m * m;
    }
    if (sum > 8 || dim > 20) continue;
    const double kappa = std::pow(10.0, logk(rng));
    Fixture f = direct_sum(s, random_invertible(sum, kappa, rng), cfg);
    f.name = "ss" + std::to_string(out.size()) + "_" + f.name;
    out.push_back(std::move(f));
  }
  return out;
}

inline MatrixAlgebra upper_triangular(Index n, const ToleranceConfig& cfg) {
  std::vector<CMatrix> g;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) g.push_back(matrix_unit(n, i, j));
  return generate_algebra(n, g, cfg);
}

/// span{I, N, ..., N^{n-1}} for the nilpotent Jordan block N; this is the
/// commutant of N.
inline MatrixAlgebra jordan_commutant(Index n, const ToleranceConfig& cfg) {
  CMatrix nil = CMatrix::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) nil(i, i + 1) = 1.0;
  return generate_algebra(n, std::vector<CMatrix>{nil}, cfg);
}

/// [[M_a, M_{a x b}], [0, M_b]]
inline MatrixAlgebra block_upper(Index a, Index b, const ToleranceConfig& cfg) {
  const Index n = a + b;
  std::vector<CMatrix> g;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (!(i >= a && j < a)) g.push_back(matrix_unit(n, i, j));
  return generate_algebra(n, g, cfg);
}

/// Algebra spanned by the diagonal units and the listed strictly off-diagonal
/// units (an incidence algebra when the list is transitively closed).
inline MatrixAlgebra incidence(Index n, const std::vector<std::pair<Index, Index>>& arrows, const ToleranceConfig& cfg) {
  std::vector<CMatrix> g;
  for (Index i = 0; i < n; ++i) g.push_back(matrix_unit(n, i, i));
  for (auto [i, j] : arrows) g.push_back(matrix_unit(n, i, j));
  return generate_algebra(n, g, cfg);
}

/// A (+) B as block-diagonal pairs.
inline MatrixAlgebra direct_sum(const MatrixAlgebra& a, const MatrixAlgebra& b, const ToleranceConfig& cfg) {
  const Index n1 = a.ambient_dim(), n2 = b.ambient_dim();
  std::vector<CMatrix> g;
  for (const auto& e : a.basis()) {
    CMatrix m = CMatrix::Zero(n1 + n2, n1 + n2);
    m.topLeftCorner(n1, n1) = e;
    g.push_back(m);
  }
  for (const auto& e : b.basis()) {
    CMatrix m = CMatrix::Zero(n1 + n2, n1 + n2);
    m.bottomRightCorner(n2, n2) = e;
    g.push_back(m);
  }
  return span_algebra(n1 + n2, std::span<const CMatrix>(g), cfg);
}

inline MatrixAlgebra full_matrix_algebra(Index n, const ToleranceConfig& cfg) {
  std::vector<CMatrix> g;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) g.push_back(matrix_unit(n, i, j));
  return span_algebra(n, std::span<const CMatrix>(g), cfg);
}

inline MatrixAlgebra scalars(Index n, const ToleranceConfig& cfg) { return generate_algebra(n, std::vector<CMatrix>{}, cfg); }

/// Twenty algebras with a nonzero radical, including conjugated copies.
inline std::vector<Fixture> nonsemisimple_corpus(std::uint64_t seed, const ToleranceConfig& cfg) {
  std::vector<Fixture> out;
  auto add = [&](std::string name, MatrixAlgebra a) {
    Fixture f;
    f.name = std::move(name);
    f.algebra = std::move(a);
    f.conjugator = identity(f.algebra.ambient_dim());
    out.push_back(std::move(f));
  };
  add("T2", upper_triangular(2, cfg));
  add("T3", upper_triangular(3, cfg));
  add("T4", upper_triangular(4, cfg));
  add("J2", jordan_commutant(2, cfg));
  add("J3", jordan_commutant(3, cfg));
  add("J4", jordan_commutant(4, cfg));
  add("BU12", block_upper(1, 2, cfg));
  add("BU21", block_upper(2, 1, cfg));
  add("BU22", block_upper(2, 2, cfg));
  add("BU13", block_upper(1, 3, cfg));
  add("T2+M1", direct_sum(upper_triangular(2, cfg), full_matrix_algebra(1, cfg), cfg));
  add("T2+M2", direct_sum(upper_triangular(2, cfg), full_matrix_algebra(2, cfg), cfg));
  add("J2+M2", direct_sum(jordan_commutant(2, cfg), full_matrix_algebra(2, cfg), cfg));
  add("V3", incidence(3, {{0, 1}, {0, 2}}, cfg));
  add("L3", incidence(3, {{0, 2}, {1, 2}}, cfg));
  std::mt19937_64 rng(seed);
  for (const std::size_t i : {std::size_t{0}, std::size_t{1}, std::size_t{3}, std::size_t{6}, std::size_t{10}}) {
    const Fixture& src = out[i];
    const CMatrix t = random_invertible(src.algebra.ambient_dim(), 10.0, rng);
    Fixture f;
    f.name = src.name + "^T";
    f.algebra = conjugate(src.algebra, t, cfg);
    f.conjugator = t;
    out.push_back(std::move(f));
  }
  return out;
}

/// M_n with actions twisted by random similarities of condition <= 10.
inline Bimodule random_bimodule(const MatrixAlgebra& a, std::mt19937_64& rng) {
  const Index n = a.ambient_dim();
  return twisted_bimodule(a, random_invertible(n, 10.0, rng), random_invertible(n, 10.0, rng));
}

}  // namespace opdiag::fixtures

#endif
