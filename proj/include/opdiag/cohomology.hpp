#ifndef OPDIAG_COHOMOLOGY_HPP
#define OPDIAG_COHOMOLOGY_HPP

// First Hochschild cohomology against finite-dimensional bimodules.
// Convention: a derivation is inner when delta(a) = a x - x a.

#include <optional>
#include <span>
#include <vector>

#include "opdiag/algebra.hpp"
#include "opdiag/diagonal.hpp"

namespace opdiag {

/// Finite-dimensional A-bimodule; left[k] and right[k] are the actions of
/// the k-th basis element of A on module coordinates.
struct Bimodule {
  Index dim = 0;
  std::vector<CMatrix> left;
  std::vector<CMatrix> right;

  CMatrix left_of(const CVector& a) const { return combine(left, a); }
  CMatrix right_of(const CVector& a) const { return combine(right, a); }

 private:
  CMatrix combine(const std::vector<CMatrix>& mats, const CVector& a) const {
    CMatrix out = CMatrix::Zero(dim, dim);
    for (Index k = 0; k < a.size(); ++k)
      if (a(k) != cplx(0)) out += a(k) * mats[static_cast<std::size_t>(k)];
    return out;
  }
};

/// delta(e_k) = D.col(k) in module coordinates.
struct Derivation {
  CMatrix D;

  CVector apply(const CVector& a) const { return D * a; }
};

struct BimoduleCheck {
  double left_hom = 0.0;
  double right_hom = 0.0;
  double commute = 0.0;
  double unit = 0.0;

  double worst() const { return std::max({left_hom, right_hom, commute, unit}); }
};

/// Axiom residuals at random probe elements and vectors, each relative to the
/// Frobenius sizes of the operators involved.
inline BimoduleCheck check_bimodule(const MatrixAlgebra& a, const Bimodule& x, const ToleranceConfig& cfg) {
  if (static_cast<Index>(x.left.size()) != a.dim() || static_cast<Index>(x.right.size()) != a.dim())
    throw Error(Errc::DimensionMismatch, "bimodule actions must be indexed by the algebra basis");
  for (const auto* side : {&x.left, &x.right})
    for (const auto& m : *side)
      if (m.rows() != x.dim || m.cols() != x.dim)
        throw Error(Errc::DimensionMismatch, "bimodule action has the wrong size");
  BimoduleCheck c;
  if (x.dim == 0) return c;
  auto rng = make_rng(cfg, 0x62696d6fULL);
  const CVector one = a.coords(identity(a.ambient_dim()));
  for (int probe = 0; probe < 3; ++probe) {
    const CMatrix s = random_element(a, rng);
    const CMatrix t = random_element(a, rng);
    const CVector cs = a.coords(s), ct = a.coords(t), cst = a.coords(s * t);
    CVector v(x.dim);
    for (Index i = 0; i < x.dim; ++i) v(i) = complex_gaussian(rng);
    v.normalize();
    const CMatrix ls = x.left_of(cs), lt = x.left_of(ct), rs = x.right_of(cs), rt = x.right_of(ct);
    const double scale = 1.0 + ls.norm() * lt.norm() + rs.norm() * rt.norm();
    c.left_hom = std::max(c.left_hom, (x.left_of(cst) * v - ls * (lt * v)).norm() / scale);
    c.right_hom = std::max(c.right_hom, (x.right_of(cst) * v - rt * (rs * v)).norm() / scale);
    c.commute = std::max(c.commute, (ls * (rt * v) - rt * (ls * v)).norm() / scale);
    c.unit = std::max(c.unit, std::max((x.left_of(one) * v - v).norm(), (x.right_of(one) * v - v).norm()));
  }
  return c;
}

inline void validate_bimodule(const MatrixAlgebra& a, const Bimodule& x, const ToleranceConfig& cfg) {
  const BimoduleCheck c = check_bimodule(a, x, cfg);
  if (c.worst() > cfg.verify_tol)
    throw Error(Errc::BimoduleAxiomViolation, "axiom residual " + std::to_string(c.worst()));
}

/// X = r1 x r2 matrices with a.x = rho1(a) x and x.a = x rho2(a), where
/// rho1, rho2 give the images of the basis of A.
inline Bimodule bimodule_from_representations(std::span<const CMatrix> rho1, std::span<const CMatrix> rho2) {
  if (rho1.size() != rho2.size()) throw Error(Errc::DimensionMismatch, "representations differ in length");
  Bimodule x;
  if (rho1.empty()) return x;
  const Index r1 = rho1[0].rows(), r2 = rho2[0].rows();
  x.dim = r1 * r2;
  for (std::size_t k = 0; k < rho1.size(); ++k) {
    x.left.push_back(kron(identity(r2), rho1[k]));
    x.right.push_back(kron(rho2[k].transpose(), identity(r1)));
  }
  return x;
}

/// M_n with the multiplication actions of A.
inline Bimodule multiplication_bimodule(const MatrixAlgebra& a) {
  const auto basis = a.basis();
  return bimodule_from_representations(std::span<const CMatrix>(basis), std::span<const CMatrix>(basis));
}

/// M_n with a.x = s1 a s1^{-1} x and x.a = x s2 a s2^{-1}.
inline Bimodule twisted_bimodule(const MatrixAlgebra& a, const CMatrix& s1, const CMatrix& s2) {
  const CMatrix i1 = s1.inverse(), i2 = s2.inverse();
  std::vector<CMatrix> r1, r2;
  for (const auto& e : a.basis()) {
    r1.push_back(s1 * e * i1);
    r2.push_back(s2 * e * i2);
  }
  return bimodule_from_representations(std::span<const CMatrix>(r1), std::span<const CMatrix>(r2));
}

inline double leibniz_residual(const MatrixAlgebra& a, const Bimodule& x, const Derivation& d) {
  const MultiplicationTable t = multiplication_table(a);
  double worst = 0.0;
  for (Index k = 0; k < a.dim(); ++k)
    for (Index l = 0; l < a.dim(); ++l) {
      const CVector lhs = d.D * t.product(k, l);
      const CVector rhs = x.left[static_cast<std::size_t>(k)] * d.D.col(l) + x.right[static_cast<std::size_t>(l)] * d.D.col(k);
      worst = std::max(worst, (lhs - rhs).norm());
    }
  return worst;
}

/// The inner derivation a -> a x - x a.
inline Derivation inner_derivation(const Bimodule& x, const CVector& v) {
  Derivation d;
  d.D.resize(x.dim, static_cast<Index>(x.left.size()));
  for (std::size_t k = 0; k < x.left.size(); ++k) d.D.col(static_cast<Index>(k)) = x.left[k] * v - x.right[k] * v;
  return d;
}

namespace detail {

// Stacked (L(g) - R(g)) over the given algebra elements: x -> (g x - x g)_g.
inline CMatrix commutator_map(const Bimodule& x, std::span<const CVector> elems) {
  CMatrix m(x.dim * static_cast<Index>(elems.size()), x.dim);
  for (std::size_t g = 0; g < elems.size(); ++g)
    m.middleRows(static_cast<Index>(g) * x.dim, x.dim) = x.left_of(elems[g]) - x.right_of(elems[g]);
  return m;
}

struct Generators {
  std::vector<CMatrix> mats;
  std::vector<CVector> coords;
  WordBasis words;
};

inline Generators tree_generators(const MatrixAlgebra& a, const ToleranceConfig& cfg) {
  Generators g;
  g.mats = generating_set(a, cfg);
  g.words = word_basis(a.ambient_dim(), std::span<const CMatrix>(g.mats), cfg);
  if (static_cast<Index>(g.words.elements.size()) != a.dim()) {
    g.mats = a.basis();
    g.words = word_basis(a.ambient_dim(), std::span<const CMatrix>(g.mats), cfg);
  }
  for (const auto& m : g.mats) g.coords.push_back(a.coords(m));
  return g;
}

}  // namespace detail

namespace detail {

// Linear constraints on z = (delta(g_q))_q. A derivation is determined by
// its values on a generating set; its values on a word basis Q_j follow from
// the Leibniz rule as delta(Q_j) = steps[j] z, and the Leibniz relations not
// used to build the tree cut out the admissible z.
struct LeibnizSystem {
  Index m = 0;
  Index unknowns = 0;
  CMatrix sys;
  std::vector<CMatrix> steps;
  CMatrix word_coords;  // column j = A-coordinates of Q_j
};

inline LeibnizSystem leibniz_system(const MatrixAlgebra& a, const Bimodule& x, const ToleranceConfig& cfg) {
  const Index d = a.dim();
  const Index m = x.dim;
  const Generators gens = tree_generators(a, cfg);
  const WordBasis& wb = gens.words;
  const Index ng = static_cast<Index>(gens.mats.size());
  LeibnizSystem ls;
  ls.m = m;
  ls.unknowns = m * ng;
  const Index unknowns = ls.unknowns;

  ls.word_coords.resize(d, d);
  std::vector<CMatrix> lq, rg;
  for (Index j = 0; j < d; ++j) {
    ls.word_coords.col(j) = a.coords(wb.elements[static_cast<std::size_t>(j)]);
    lq.push_back(x.left_of(ls.word_coords.col(j)));
  }
  for (const auto& c : gens.coords) rg.push_back(x.right_of(c));

  auto& mj = ls.steps;
  mj.assign(static_cast<std::size_t>(d), CMatrix());
  mj[0] = CMatrix::Zero(m, unknowns);
  std::vector<std::vector<bool>> edge(static_cast<std::size_t>(d), std::vector<bool>(static_cast<std::size_t>(ng), false));
  for (Index j = 1; j < d; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const Index p = wb.parent[ju], q = wb.gen[ju];
    edge[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] = true;
    CMatrix acc = rg[static_cast<std::size_t>(q)] * mj[static_cast<std::size_t>(p)];
    acc.middleCols(q * m, m) += lq[static_cast<std::size_t>(p)];
    for (Index l = 0; l < j; ++l) acc -= wb.overlap[ju](l) * mj[static_cast<std::size_t>(l)];
    mj[ju] = acc / wb.rho[ju];
  }

  const auto word_frame = [&](const CMatrix& mat) {
    CVector c(d);
    const CVector v = vec(mat);
    for (Index l = 0; l < d; ++l) c(l) = vec(wb.elements[static_cast<std::size_t>(l)]).dot(v);
    return c;
  };
  const auto expand = [&](const CVector& c, Eigen::Ref<CMatrix> out) {
    for (Index l = 0; l < d; ++l)
      if (std::abs(c(l)) > 0) out += c(l) * mj[static_cast<std::size_t>(l)];
  };

  Index blocks = ng;
  for (Index i = 0; i < d; ++i)
    for (Index q = 0; q < ng; ++q)
      if (!edge[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)]) ++blocks;
  ls.sys = CMatrix::Zero(m * blocks, unknowns);
  Index row = 0;
  for (Index q = 0; q < ng; ++q, row += m) {
    auto r = ls.sys.middleRows(row, m);
    r.middleCols(q * m, m).setIdentity();
    r *= -1.0;
    expand(word_frame(gens.mats[static_cast<std::size_t>(q)]), r);
  }
  for (Index i = 0; i < d; ++i)
    for (Index q = 0; q < ng; ++q) {
      if (edge[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)]) continue;
      auto r = ls.sys.middleRows(row, m);
      expand(word_frame(wb.elements[static_cast<std::size_t>(i)] * gens.mats[static_cast<std::size_t>(q)]), r);
      r.noalias() -= rg[static_cast<std::size_t>(q)] * mj[static_cast<std::size_t>(i)];
      r.middleCols(q * m, m) -= lq[static_cast<std::size_t>(i)];
      row += m;
    }
  return ls;
}

}  // namespace detail

/// Basis (orthonormal in the Frobenius inner product on D) of all
/// derivations A -> X.
inline std::vector<Derivation> derivation_space(const MatrixAlgebra& a, const Bimodule& x, const ToleranceConfig& cfg) {
  cfg.validate();
  validate_bimodule(a, x, cfg);
  const Index d = a.dim();
  const Index m = x.dim;
  if (m == 0) return {};
  const detail::LeibnizSystem ls = detail::leibniz_system(a, x, cfg);
  const CMatrix null = nullspace(ls.sys, cfg.rank_tol, 1.0);
  if (null.cols() == 0) return {};

  // delta(e_k) = sum_j <Q_j, e_k> delta(Q_j)
  CMatrix stacked(m * d, null.cols());
  for (Index c = 0; c < null.cols(); ++c) {
    CMatrix vals(m, d);
    for (Index j = 0; j < d; ++j) vals.col(j) = ls.steps[static_cast<std::size_t>(j)] * null.col(c);
    stacked.col(c) = vec(vals * ls.word_coords.adjoint());
  }
  const CMatrix orth = orthonormal_range(stacked, cfg.rank_tol, 1e-300);
  std::vector<Derivation> out;
  for (Index c = 0; c < orth.cols(); ++c) out.push_back({unvec(orth.col(c), m, d)});
  return out;
}

/// Orthonormal basis of the inner derivations a -> a x - x a.
inline std::vector<Derivation> inner_derivations(const MatrixAlgebra& a, const Bimodule& x, const ToleranceConfig& cfg) {
  cfg.validate();
  if (x.dim == 0) return {};
  CMatrix stacked(x.dim * a.dim(), x.dim);
  for (Index k = 0; k < a.dim(); ++k)
    stacked.middleRows(k * x.dim, x.dim) = x.left[static_cast<std::size_t>(k)] - x.right[static_cast<std::size_t>(k)];
  // column c of the image, reshaped, is the derivation matrix D (m x d)
  const CMatrix orth = orthonormal_range(stacked, cfg.rank_tol, 1.0);
  std::vector<Derivation> out;
  for (Index c = 0; c < orth.cols(); ++c) {
    CMatrix dmat(x.dim, a.dim());
    for (Index k = 0; k < a.dim(); ++k) dmat.col(k) = orth.col(c).segment(k * x.dim, x.dim);
    out.push_back({dmat});
  }
  return out;
}

/// dim Der(A, X) - dim Inn(A, X), from ranks only.
inline Index h1_dimension(const MatrixAlgebra& a, const Bimodule& x, const ToleranceConfig& cfg) {
  cfg.validate();
  validate_bimodule(a, x, cfg);
  if (x.dim == 0) return 0;
  const detail::LeibnizSystem ls = detail::leibniz_system(a, x, cfg);
  const Index der = ls.unknowns - rank(ls.sys, cfg.rank_tol, 1.0);
  const detail::Generators gens = detail::tree_generators(a, cfg);
  const Index inn = rank(detail::commutator_map(x, std::span<const CVector>(gens.coords)), cfg.rank_tol, 1.0);
  return std::max<Index>(0, der - inn);
}

/// ker(multiplication) inside A (x) A, in coordinates z with
/// vec(C) = embedding * z for the algebra coefficient matrix C.
struct KernelBimodule {
  Bimodule module;
  CMatrix embedding;  // d^2 x dim, orthonormal columns
  Index algebra_dim = 0;

  CMatrix coefficients(const CVector& z) const { return unvec(embedding * z, algebra_dim, algebra_dim); }

  TensorElement to_tensor(const MatrixAlgebra& a, const CVector& z, const ToleranceConfig& cfg) const {
    return tensor_from_coefficients(a, coefficients(z), cfg);
  }

  CVector from_coefficients(const CMatrix& c) const { return embedding.adjoint() * vec(c); }
};

inline KernelBimodule kernel_bimodule(const MatrixAlgebra& a, const ToleranceConfig& cfg) {
  cfg.validate();
  const MultiplicationTable t = multiplication_table(a);
  const Index d = a.dim();
  CMatrix mult(d, d * d);
  for (Index k = 0; k < d; ++k)
    for (Index l = 0; l < d; ++l) mult.col(k + l * d) = t.product(k, l);
  KernelBimodule kb;
  kb.algebra_dim = d;
  kb.embedding = nullspace(mult, cfg.rank_tol, 1.0);
  const Index m = kb.embedding.cols();
  kb.module.dim = m;
  // columns of the embedding viewed as d x d coefficient matrices
  const CMatrix wide = Eigen::Map<const CMatrix>(kb.embedding.data(), d, d * m);
  for (Index j = 0; j < d; ++j) {
    const CMatrix lj = t.left(j);
    const CMatrix rjt = t.right(j).transpose();
    const CMatrix left_img = lj * wide;
    CMatrix right_img(d * d, m);
    for (Index c = 0; c < m; ++c)
      right_img.col(c) = vec(unvec(kb.embedding.col(c), d, d) * rjt);
    kb.module.left.push_back(kb.embedding.adjoint() * Eigen::Map<const CMatrix>(left_img.data(), d * d, m));
    kb.module.right.push_back(kb.embedding.adjoint() * right_img);
  }
  return kb;
}

/// a -> a (x) 1 - 1 (x) a in kernel coordinates.
inline Derivation canonical_derivation(const MatrixAlgebra& a, const KernelBimodule& kb) {
  const Index d = a.dim();
  const CVector one = a.coords(identity(a.ambient_dim()));
  Derivation delta;
  delta.D.resize(kb.module.dim, d);
  for (Index k = 0; k < d; ++k) {
    const CVector ek = CVector::Unit(d, k);
    const CMatrix c = ek * one.transpose() - one * ek.transpose();
    delta.D.col(k) = kb.from_coefficients(c);
  }
  return delta;
}

struct InnerSolve {
  std::optional<CVector> x;
  double residual = 0.0;  ///< max over basis k of ||delta(e_k) - (e_k x - x e_k)||

  bool inner() const noexcept { return x.has_value(); }
};

inline double implementation_residual(const Bimodule& x, const Derivation& delta, const CVector& v) {
  double worst = 0.0;
  for (std::size_t k = 0; k < x.left.size(); ++k)
    worst = std::max(worst, (delta.D.col(static_cast<Index>(k)) - (x.left[k] * v - x.right[k] * v)).norm());
  return worst;
}

/// Minimum-norm x with delta(a) = a x - x a, solved against a generating set
/// and checked on the whole basis.
inline InnerSolve solve_inner(const MatrixAlgebra& a, const Bimodule& x, const Derivation& delta, const ToleranceConfig& cfg) {
  cfg.validate();
  InnerSolve out;
  if (x.dim == 0) {
    out.x = CVector(0);
    return out;
  }
  const auto gens = generating_set(a, cfg);
  std::vector<CVector> coords;
  for (const auto& g : gens) coords.push_back(a.coords(g));
  const CMatrix sys = detail::commutator_map(x, std::span<const CVector>(coords));
  CVector rhs(sys.rows());
  for (std::size_t g = 0; g < coords.size(); ++g) rhs.segment(static_cast<Index>(g) * x.dim, x.dim) = delta.D * coords[g];
  const LeastSquares ls = min_norm_least_squares(sys, rhs, cfg.rank_tol);
  out.residual = std::max(ls.residual, implementation_residual(x, delta, ls.x));
  if (out.residual <= cfg.verify_tol) out.x = ls.x;
  return out;
}

struct Witness {
  CVector x;
  double residual = 0.0;
};

/// x = -sum_i delta(a_i) b_i, which implements delta as a -> a x - x a when
/// u is a diagonal.
inline Witness witness_from_diagonal(const MatrixAlgebra& a, const TensorElement& u, const Bimodule& x,
                                     const Derivation& delta, const ToleranceConfig& cfg) {
  const DiagonalReport rep = is_diagonal(a, u, cfg);
  if (!rep.verdict)
    throw Error(Errc::DiagonalInvalid, "unit residual " + std::to_string(rep.unit_residual) + ", commutation residual " +
                                           std::to_string(rep.commutation_residual));
  Witness w;
  w.x = CVector::Zero(x.dim);
  for (const auto& t : u.terms) w.x -= x.right_of(a.coords(t.b)) * (delta.D * a.coords(t.a));
  w.residual = implementation_residual(x, delta, w.x);
  return w;
}

}  // namespace opdiag

#endif
