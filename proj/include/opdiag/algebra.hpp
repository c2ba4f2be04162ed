#ifndef OPDIAG_ALGEBRA_HPP
#define OPDIAG_ALGEBRA_HPP

// Unital subalgebras of M_n: closure generation, coordinates, membership,
// commutant and the left regular representation of an abstract algebra.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "opdiag/config.hpp"
#include "opdiag/errors.hpp"
#include "opdiag/linalg.hpp"

namespace opdiag {

/// A unital subalgebra of M_n, stored as a basis that is orthonormal for
/// the trace inner product <x, y> = tr(y* x). Immutable.
class MatrixAlgebra {
 public:
  MatrixAlgebra() = default;

  /// Takes ownership of an orthonormal basis given as the columns of
  /// `frame` (each column is vec of an n x n matrix). No closure check.
  MatrixAlgebra(Index ambient_dim, CMatrix frame) : n_(ambient_dim), frame_(std::move(frame)) {
    if (frame_.rows() != n_ * n_)
      throw Error(Errc::DimensionMismatch, "basis frame rows must equal n^2");
  }

  Index ambient_dim() const noexcept { return n_; }
  Index dim() const noexcept { return frame_.cols(); }

  /// n^2 x dim matrix whose columns are the vectorised basis elements.
  const CMatrix& frame() const noexcept { return frame_; }

  CMatrix basis(Index k) const { return unvec(frame_.col(k), n_, n_); }

  std::vector<CMatrix> basis() const {
    std::vector<CMatrix> out;
    out.reserve(static_cast<std::size_t>(dim()));
    for (Index k = 0; k < dim(); ++k) out.push_back(basis(k));
    return out;
  }

  /// Orthogonal-projection coordinates of x in the basis.
  CVector coords(const CMatrix& x) const { return frame_.adjoint() * vec(x); }

  CMatrix element(const CVector& c) const { return unvec(frame_ * c, n_, n_); }

 private:
  Index n_ = 0;
  CMatrix frame_;
};

/// e_i e_j = sum_k table(i, j, k) e_k for an abstract algebra.
struct StructureConstants {
  Index dim = 0;
  std::vector<cplx> table;  // flattened, index (i * dim + j) * dim + k
  Index unit_index = 0;

  cplx& operator()(Index i, Index j, Index k) {
    return table[static_cast<std::size_t>((i * dim + j) * dim + k)];
  }
  cplx operator()(Index i, Index j, Index k) const {
    return table[static_cast<std::size_t>((i * dim + j) * dim + k)];
  }
};

/// Products of the orthonormal basis of a MatrixAlgebra, expanded back in
/// that basis, plus the coordinates of the identity.
struct MultiplicationTable {
  Index dim = 0;
  std::vector<CVector> products;  // products[i * dim + j] = coords(e_i e_j)
  CVector unit;

  const CVector& product(Index i, Index j) const { return products[static_cast<std::size_t>(i * dim + j)]; }

  /// Matrix of x -> e_i x in basis coordinates.
  CMatrix left(Index i) const {
    CMatrix l(dim, dim);
    for (Index j = 0; j < dim; ++j) l.col(j) = product(i, j);
    return l;
  }

  /// Matrix of x -> x e_i in basis coordinates.
  CMatrix right(Index i) const {
    CMatrix r(dim, dim);
    for (Index j = 0; j < dim; ++j) r.col(j) = product(j, i);
    return r;
  }

  CMatrix left_of(const CVector& a) const {
    CMatrix l = CMatrix::Zero(dim, dim);
    for (Index i = 0; i < dim; ++i)
      if (a(i) != cplx(0)) l += a(i) * left(i);
    return l;
  }

  CMatrix right_of(const CVector& a) const {
    CMatrix r = CMatrix::Zero(dim, dim);
    for (Index i = 0; i < dim; ++i)
      if (a(i) != cplx(0)) r += a(i) * right(i);
    return r;
  }
};

inline MultiplicationTable multiplication_table(const MatrixAlgebra& a) {
  MultiplicationTable t;
  t.dim = a.dim();
  const auto basis = a.basis();
  t.products.reserve(static_cast<std::size_t>(t.dim * t.dim));
  for (Index i = 0; i < t.dim; ++i)
    for (Index j = 0; j < t.dim; ++j) t.products.push_back(a.coords(basis[i] * basis[j]));
  t.unit = a.coords(identity(a.ambient_dim()));
  return t;
}

struct AlgebraCheck {
  double unit_residual = 0.0;
  double closure_residual = 0.0;
  double orthonormality_residual = 0.0;
  bool ok = false;
};

/// Re-checks the MatrixAlgebra invariants: unit in span, closure under
/// products, orthonormal basis.
inline AlgebraCheck check_algebra(const MatrixAlgebra& a, const ToleranceConfig& cfg) {
  AlgebraCheck c;
  const Index n = a.ambient_dim();
  const CMatrix& f = a.frame();
  c.orthonormality_residual = (f.adjoint() * f - identity(a.dim())).norm();
  const CVector one = vec(identity(n));
  c.unit_residual = (one - f * (f.adjoint() * one)).norm();
  const auto basis = a.basis();
  for (const auto& x : basis)
    for (const auto& y : basis) {
      const CVector p = vec(x * y);
      c.closure_residual = std::max(c.closure_residual, (p - f * (f.adjoint() * p)).norm());
    }
  c.ok = a.dim() >= 1 && c.unit_residual <= cfg.verify_tol && c.closure_residual <= cfg.verify_tol &&
         c.orthonormality_residual <= cfg.verify_tol;
  return c;
}

namespace detail {

inline void check_generators(Index n, std::span<const CMatrix> generators) {
  for (const auto& g : generators) {
    if (g.rows() != g.cols()) throw Error(Errc::NonSquareInput, "generator is not square");
    if (g.rows() != n)
      throw Error(Errc::DimensionMismatch,
                  "generator of size " + std::to_string(g.rows()) + " in M_" + std::to_string(n));
  }
}

}  // namespace detail

/// Smallest algebra containing the generators (and the identity when
/// include_identity). Each round multiplies the whole current basis on the
/// right by every generator and keeps the singular directions that are new;
/// stops after a round that adds nothing.
inline MatrixAlgebra generate_algebra(Index ambient_dim, std::span<const CMatrix> generators,
                                      bool include_identity, const ToleranceConfig& cfg) {
  cfg.validate();
  const Index n = ambient_dim;
  if (n <= 0) throw Error(Errc::DimensionMismatch, "ambient dimension must be positive");
  detail::check_generators(n, generators);

  std::vector<CMatrix> gens;
  for (const auto& g : generators) {
    const double norm = g.norm();
    if (norm > 0) gens.push_back(g / norm);
  }

  CMatrix seed(n * n, 0);
  {
    std::vector<CVector> cols;
    if (include_identity) cols.push_back(vec(identity(n)));
    for (const auto& g : gens) cols.push_back(vec(g));
    seed.resize(n * n, static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) seed.col(static_cast<Index>(i)) = cols[i];
  }
  CMatrix frame = extend_orthonormal(CMatrix(n * n, 0), seed, cfg.rank_tol, 1.0);

  const Index max_dim = n * n;
  while (frame.cols() < max_dim && !gens.empty()) {
    CMatrix cand(n * n, frame.cols() * static_cast<Index>(gens.size()));
    Index c = 0;
    for (Index k = 0; k < frame.cols(); ++k) {
      const CMatrix b = unvec(frame.col(k), n, n);
      for (const auto& g : gens) cand.col(c++) = vec(b * g);
    }
    const CMatrix fresh = extend_orthonormal(frame, cand, cfg.rank_tol, 1.0);
    if (fresh.cols() == 0) break;
    CMatrix grown(n * n, frame.cols() + fresh.cols());
    grown << frame, fresh;
    frame.swap(grown);
  }
  if (frame.cols() > max_dim) frame.conservativeResize(Eigen::NoChange, max_dim);

  MatrixAlgebra out(n, std::move(frame));
  if (!include_identity) {
    const CVector one = vec(identity(n));
    const double resid = (one - out.frame() * (out.frame().adjoint() * one)).norm();
    if (resid > cfg.verify_tol) throw Error(Errc::NotUnital, "generated algebra does not contain the identity");
  }
  return out;
}

inline MatrixAlgebra generate_algebra(Index ambient_dim, const std::vector<CMatrix>& generators,
                                      const ToleranceConfig& cfg) {
  return generate_algebra(ambient_dim, std::span<const CMatrix>(generators), true, cfg);
}

struct Membership {
  std::optional<CVector> coefficients;  ///< set iff x is a member
  double residual = 0.0;                ///< ||x - proj_A(x)||_F

  bool member() const noexcept { return coefficients.has_value(); }
};

inline Membership membership(const MatrixAlgebra& a, const CMatrix& x, const ToleranceConfig& cfg) {
  if (x.rows() != a.ambient_dim() || x.cols() != a.ambient_dim())
    throw Error(Errc::DimensionMismatch, "membership query has the wrong size");
  Membership m;
  const CVector c = a.coords(x);
  m.residual = (vec(x) - a.frame() * c).norm();
  if (m.residual <= cfg.verify_tol * (1.0 + x.norm())) m.coefficients = c;
  return m;
}

/// A' = {x : x a = a x for all a in A}, the joint null space of the maps
/// x -> e_k x - x e_k.
inline MatrixAlgebra commutant(const MatrixAlgebra& a, const ToleranceConfig& cfg) {
  const Index n = a.ambient_dim();
  const CMatrix id = identity(n);
  CMatrix system(n * n * a.dim(), n * n);
  for (Index k = 0; k < a.dim(); ++k) {
    const CMatrix e = a.basis(k);
    system.middleRows(k * n * n, n * n) = kron(id, e) - kron(e.transpose(), id);
  }
  return MatrixAlgebra(n, nullspace(system, cfg.rank_tol, 1.0));
}

/// Algebra spanned by a set of matrices already known to be closed under
/// products (images of homomorphisms, conjugates); orthonormalises only.
inline MatrixAlgebra span_algebra(Index ambient_dim, std::span<const CMatrix> mats, const ToleranceConfig& cfg) {
  detail::check_generators(ambient_dim, mats);
  CMatrix cols(ambient_dim * ambient_dim, static_cast<Index>(mats.size()));
  for (std::size_t i = 0; i < mats.size(); ++i) cols.col(static_cast<Index>(i)) = vec(mats[i]);
  return MatrixAlgebra(ambient_dim, orthonormal_range(cols, cfg.rank_tol, 1e-300));
}

/// Associativity and unit-law residuals of a structure-constant table.
struct StructureCheck {
  double associativity_residual = 0.0;
  double unit_residual = 0.0;
};

inline StructureCheck check_structure(const StructureConstants& sc) {
  StructureCheck out;
  const Index d = sc.dim;
  if (static_cast<Index>(sc.table.size()) != d * d * d)
    throw Error(Errc::DimensionMismatch, "structure table must have dim^3 entries");
  if (sc.unit_index < 0 || sc.unit_index >= d) throw Error(Errc::DimensionMismatch, "unit index out of range");
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      for (Index k = 0; k < d; ++k)
        for (Index l = 0; l < d; ++l) {
          cplx lhs = 0, rhs = 0;
          for (Index m = 0; m < d; ++m) {
            lhs += sc(i, j, m) * sc(m, k, l);
            rhs += sc(j, k, m) * sc(i, m, l);
          }
          out.associativity_residual = std::max(out.associativity_residual, std::abs(lhs - rhs));
        }
  const Index u = sc.unit_index;
  for (Index j = 0; j < d; ++j)
    for (Index k = 0; k < d; ++k) {
      const cplx delta = (j == k) ? 1.0 : 0.0;
      out.unit_residual = std::max(out.unit_residual, std::abs(sc(u, j, k) - delta));
      out.unit_residual = std::max(out.unit_residual, std::abs(sc(j, u, k) - delta));
    }
  return out;
}

/// Matrices L(e_i) of left multiplication, L(e_i)[k][j] = c[i][j][k].
inline std::vector<CMatrix> regular_matrices(const StructureConstants& sc) {
  std::vector<CMatrix> out;
  for (Index i = 0; i < sc.dim; ++i) {
    CMatrix l(sc.dim, sc.dim);
    for (Index j = 0; j < sc.dim; ++j)
      for (Index k = 0; k < sc.dim; ++k) l(k, j) = sc(i, j, k);
    out.push_back(std::move(l));
  }
  return out;
}

/// Faithful image of an abstract unital algebra under left multiplication.
inline MatrixAlgebra left_regular_representation(const StructureConstants& sc, const ToleranceConfig& cfg) {
  const StructureCheck chk = check_structure(sc);
  if (chk.associativity_residual > cfg.verify_tol)
    throw Error(Errc::AssociativityViolation, "associativity residual " + std::to_string(chk.associativity_residual));
  if (chk.unit_residual > cfg.verify_tol)
    throw Error(Errc::AssociativityViolation, "unit law residual " + std::to_string(chk.unit_residual));
  const auto mats = regular_matrices(sc);
  return span_algebra(sc.dim, std::span<const CMatrix>(mats), cfg);
}

/// Random element with i.i.d. complex Gaussian coordinates, unit Frobenius norm.
inline CMatrix random_element(const MatrixAlgebra& a, std::mt19937_64& rng) {
  CVector c(a.dim());
  for (Index k = 0; k < a.dim(); ++k) c(k) = complex_gaussian(rng);
  c.normalize();
  return a.element(c);
}

/// Orthonormal basis of A grown as a word tree over a generator set:
/// element j is the normalised residual of (element parent[j]) * g[gen[j]]
/// after projecting out elements 0..j-1. Element 0 is I / sqrt(n).
struct WordBasis {
  std::vector<CMatrix> elements;
  std::vector<Index> parent;  // -1 for element 0
  std::vector<Index> gen;
  std::vector<CVector> overlap;  // overlap[j](l) = <element l, parent*g>, l < j
  std::vector<double> rho;       // norm of the residual that became element j
};

inline WordBasis word_basis(Index n, std::span<const CMatrix> gens, const ToleranceConfig& cfg) {
  WordBasis wb;
  const Index k = static_cast<Index>(gens.size());
  wb.elements.push_back(identity(n) / std::sqrt(static_cast<double>(n)));
  wb.parent.push_back(-1);
  wb.gen.push_back(-1);
  wb.overlap.emplace_back(0);
  wb.rho.push_back(1.0);

  // candidate residuals, refreshed as the basis grows
  struct Cand {
    Index parent, g;
    CMatrix prod, resid;
    bool used = false;
  };
  std::vector<Cand> cands;
  auto add_candidates = [&](Index j) {
    for (Index q = 0; q < k; ++q) {
      Cand c{j, q, wb.elements[static_cast<std::size_t>(j)] * gens[static_cast<std::size_t>(q)], {}, false};
      c.resid = c.prod;
      for (const auto& e : wb.elements) c.resid -= (vec(e).dot(vec(c.resid))) * e;
      cands.push_back(std::move(c));
    }
  };
  add_candidates(0);
  while (static_cast<Index>(wb.elements.size()) < n * n) {
    double best = 0.0;
    std::size_t arg = cands.size();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (cands[i].used) continue;
      const double r = cands[i].resid.norm();
      const double scale = std::max(1.0, cands[i].prod.norm());
      if (r > cfg.rank_tol * scale * 100 && r > best) {
        best = r;
        arg = i;
      }
    }
    if (arg == cands.size()) break;
    Cand& c = cands[arg];
    c.used = true;
    CVector ov(static_cast<Index>(wb.elements.size()));
    CMatrix resid = c.prod;
    for (std::size_t l = 0; l < wb.elements.size(); ++l) {
      ov(static_cast<Index>(l)) = vec(wb.elements[l]).dot(vec(c.prod));
      resid -= ov(static_cast<Index>(l)) * wb.elements[l];
    }
    // second Gram-Schmidt pass folded into the overlaps
    for (std::size_t l = 0; l < wb.elements.size(); ++l) {
      const cplx extra = vec(wb.elements[l]).dot(vec(resid));
      ov(static_cast<Index>(l)) += extra;
      resid -= extra * wb.elements[l];
    }
    const double rho = resid.norm();
    const CMatrix e = resid / rho;
    for (auto& other : cands)
      if (!other.used) other.resid -= vec(e).dot(vec(other.resid)) * e;
    wb.elements.push_back(e);
    wb.parent.push_back(c.parent);
    wb.gen.push_back(c.g);
    wb.overlap.push_back(ov);
    wb.rho.push_back(rho);
    add_candidates(static_cast<Index>(wb.elements.size()) - 1);
  }
  return wb;
}

/// A small generating set of random elements, verified to generate A.
/// Falls back to the full basis when random elements do not suffice.
inline std::vector<CMatrix> generating_set(const MatrixAlgebra& a, const ToleranceConfig& cfg) {
  auto rng = make_rng(cfg, 0x67656e73ULL);
  std::vector<CMatrix> gens;
  const Index limit = std::min<Index>(a.dim(), 6);
  for (Index k = 1; k <= limit; ++k) {
    gens.push_back(random_element(a, rng));
    if (k == 1 && a.dim() > 1) continue;
    const WordBasis wb = word_basis(a.ambient_dim(), std::span<const CMatrix>(gens), cfg);
    if (static_cast<Index>(wb.elements.size()) >= a.dim()) return gens;
  }
  return a.basis();
}

}  // namespace opdiag

#endif
