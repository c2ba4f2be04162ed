#ifndef OPDIAG_DIAGONAL_HPP
#define OPDIAG_DIAGONAL_HPP

#include <optional>
#include <span>
#include <vector>

#include "opdiag/algebra.hpp"

namespace opdiag {

/// Finite sum of elementary tensors a_i (x) b_i with factors in M_n.
struct TensorElement {
  struct Term {
    CMatrix a;
    CMatrix b;
  };

  Index n = 0;
  std::vector<Term> terms;

  TensorElement() = default;
  explicit TensorElement(Index ambient_dim) : n(ambient_dim) {}

  std::size_t size() const noexcept { return terms.size(); }
  bool empty() const noexcept { return terms.empty(); }

  void add(CMatrix a, CMatrix b) {
    if (a.rows() != n || a.cols() != n || b.rows() != n || b.cols() != n)
      throw Error(Errc::DimensionMismatch, "tensor factor has the wrong size");
    terms.push_back({std::move(a), std::move(b)});
  }

  /// Left factors as the columns vec(a_i) of an n^2 x r matrix.
  CMatrix left_frame() const {
    CMatrix f(n * n, static_cast<Index>(terms.size()));
    for (std::size_t i = 0; i < terms.size(); ++i) f.col(static_cast<Index>(i)) = vec(terms[i].a);
    return f;
  }

  CMatrix right_frame() const {
    CMatrix f(n * n, static_cast<Index>(terms.size()));
    for (std::size_t i = 0; i < terms.size(); ++i) f.col(static_cast<Index>(i)) = vec(terms[i].b);
    return f;
  }

  TensorElement scaled(cplx s) const {
    TensorElement out(n);
    for (const auto& t : terms) out.terms.push_back({s * t.a, t.b});
    return out;
  }
};

inline TensorElement operator-(const TensorElement& u, const TensorElement& v) {
  if (u.n != v.n) throw Error(Errc::DimensionMismatch, "tensor sizes differ");
  TensorElement out = u;
  for (const auto& t : v.terms) out.terms.push_back({-t.a, t.b});
  return out;
}

inline void check_tensor(const TensorElement& u) {
  for (const auto& t : u.terms)
    if (t.a.rows() != u.n || t.a.cols() != u.n || t.b.rows() != u.n || t.b.cols() != u.n)
      throw Error(Errc::DimensionMismatch, "tensor factor has the wrong size");
}

/// sum_i a_i b_i
inline CMatrix multiply(const TensorElement& u) {
  CMatrix m = CMatrix::Zero(u.n, u.n);
  for (const auto& t : u.terms) m += t.a * t.b;
  return m;
}

/// sum_i vec(a_i) vec(b_i)^T, the coordinates of u in the matrix-unit basis
/// of M_n (x) M_n.
inline CMatrix ambient_coefficients(const TensorElement& u) {
  if (u.empty()) return CMatrix::Zero(u.n * u.n, u.n * u.n);
  return u.left_frame() * u.right_frame().transpose();
}

inline double tensor_distance(const TensorElement& u, const TensorElement& v) {
  return (ambient_coefficients(u) - ambient_coefficients(v)).norm();
}

/// Canonical diagonal sum_i E_i1 (x) E_1i of M_n.
inline TensorElement canonical_diagonal(Index n) {
  TensorElement u(n);
  for (Index i = 0; i < n; ++i) u.add(matrix_unit(n, i, 0), matrix_unit(n, 0, i));
  return u;
}

inline TensorElement unit_tensor(Index n) {
  TensorElement u(n);
  u.add(identity(n), identity(n));
  return u;
}

/// Coordinates of u in the basis e_k (x) e_l of A (x) A. Throws when a
/// factor is not in A.
inline CMatrix algebra_coefficients(const MatrixAlgebra& a, const TensorElement& u, const ToleranceConfig& cfg) {
  if (u.n != a.ambient_dim()) throw Error(Errc::DimensionMismatch, "tensor and algebra sizes differ");
  CMatrix c = CMatrix::Zero(a.dim(), a.dim());
  for (const auto& t : u.terms) {
    const Membership ma = membership(a, t.a, cfg);
    const Membership mb = membership(a, t.b, cfg);
    if (!ma.member() || !mb.member())
      throw Error(Errc::FactorNotInAlgebra,
                  "factor residual " + std::to_string(std::max(ma.residual, mb.residual)));
    c += *ma.coefficients * mb.coefficients->transpose();
  }
  return c;
}

namespace detail {

// Splits a coefficient matrix K = sum_i x_i y_i^T given as left/right frames
// into an independent family with balanced factor norms and fixed phases.
inline std::pair<CMatrix, CMatrix> reduce_frames(const CMatrix& fa, const CMatrix& fb, double rank_tol) {
  const Index rows = fa.rows();
  if (fa.cols() == 0) return {CMatrix(rows, 0), CMatrix(fb.rows(), 0)};
  Eigen::HouseholderQR<CMatrix> qa(fa), qb(fb);
  const Index ka = std::min(fa.rows(), fa.cols());
  const Index kb = std::min(fb.rows(), fb.cols());
  const CMatrix qa_thin = qa.householderQ() * CMatrix::Identity(fa.rows(), ka);
  const CMatrix qb_thin = qb.householderQ() * CMatrix::Identity(fb.rows(), kb);
  const CMatrix ra = qa.matrixQR().topRows(ka).triangularView<Eigen::Upper>();
  const CMatrix rb = qb.matrixQR().topRows(kb).triangularView<Eigen::Upper>();
  const CMatrix core = ra * rb.transpose();
  Eigen::JacobiSVD<CMatrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index r = numerical_rank(svd.singularValues(), rank_tol);
  CMatrix left = qa_thin * svd.matrixU().leftCols(r);
  CMatrix right = qb_thin * svd.matrixV().leftCols(r).conjugate();
  for (Index i = 0; i < r; ++i) {
    const double s = std::sqrt(svd.singularValues()(i));
    Index arg = 0;
    left.col(i).cwiseAbs().maxCoeff(&arg);
    const cplx phase = std::abs(left(arg, i)) > 0 ? std::conj(left(arg, i)) / std::abs(left(arg, i)) : cplx(1);
    left.col(i) *= phase * s;
    right.col(i) *= s / phase;
  }
  return {left, right};
}

}  // namespace detail

/// Equivalent representation with linearly independent left factors and
/// linearly independent right factors; its length is the tensor rank.
inline TensorElement reduce_representation(const TensorElement& u, const ToleranceConfig& cfg) {
  check_tensor(u);
  TensorElement out(u.n);
  if (u.empty()) return out;
  const auto [left, right] = detail::reduce_frames(u.left_frame(), u.right_frame(), cfg.rank_tol);
  for (Index i = 0; i < left.cols(); ++i)
    out.terms.push_back({unvec(left.col(i), u.n, u.n), unvec(right.col(i), u.n, u.n)});
  return out;
}

/// Tensor with algebra coordinates c, in reduced form.
inline TensorElement tensor_from_coefficients(const MatrixAlgebra& a, const CMatrix& c, const ToleranceConfig& cfg) {
  TensorElement out(a.ambient_dim());
  if (c.size() == 0 || c.norm() == 0.0) return out;
  const auto [left, right] = detail::reduce_frames(c, CMatrix::Identity(c.cols(), c.cols()), cfg.rank_tol);
  for (Index i = 0; i < left.cols(); ++i) out.terms.push_back({a.element(left.col(i)), a.element(right.col(i))});
  return out;
}

struct DiagonalReport {
  double unit_residual = 0.0;
  double commutation_residual = 0.0;
  bool verdict = false;
};

/// ||e u - u e|| in the orthonormal coordinates of A (x) A, with u given by
/// algebra coordinates.
inline double commutation_residual(const MultiplicationTable& t, const CMatrix& c, const CVector& e) {
  return (t.left_of(e) * c - c * t.right_of(e).transpose()).norm();
}

inline DiagonalReport is_diagonal(const MatrixAlgebra& a, const TensorElement& u, const ToleranceConfig& cfg) {
  cfg.validate();
  check_tensor(u);
  const CMatrix c = algebra_coefficients(a, u, cfg);
  const MultiplicationTable t = multiplication_table(a);
  DiagonalReport rep;
  rep.unit_residual = (multiply(u) - identity(a.ambient_dim())).norm();
  for (Index k = 0; k < a.dim(); ++k)
    rep.commutation_residual = std::max(rep.commutation_residual, (t.left(k) * c - c * t.right(k).transpose()).norm());
  rep.verdict = rep.unit_residual <= cfg.verify_tol && rep.commutation_residual <= cfg.verify_tol;
  return rep;
}

struct DiagonalSolve {
  std::optional<TensorElement> diagonal;
  double residual = 0.0;  ///< least-squares residual of the constraint system
  double solution_norm = 0.0;

  bool feasible() const noexcept { return diagonal.has_value(); }
};

namespace detail {

// Linear system for coefficient matrices C (vec, column-major) of diagonals:
// L_g C - C R_g^T = 0 for each g in `elements`, and m(C) = unit.
inline LeastSquares solve_diagonal_system(const MultiplicationTable& t, std::span<const CVector> elements,
                                          double rank_tol) {
  const Index d = t.dim;
  const Index dd = d * d;
  const Index blocks = static_cast<Index>(elements.size());
  CMatrix sys = CMatrix::Zero(blocks * dd + d, dd);
  const CMatrix id = identity(d);
  for (Index g = 0; g < blocks; ++g) {
    const CVector& e = elements[static_cast<std::size_t>(g)];
    sys.middleRows(g * dd, dd) = kron(id, t.left_of(e)) - kron(t.right_of(e), id);
  }
  for (Index k = 0; k < d; ++k)
    for (Index l = 0; l < d; ++l) sys.block(blocks * dd, k + l * d, d, 1) = t.product(k, l);
  CVector rhs = CVector::Zero(blocks * dd + d);
  rhs.tail(d) = t.unit;
  return min_norm_least_squares(sys, rhs, rank_tol);
}

}  // namespace detail

/// Minimum-norm diagonal of A, or the residual certifying that none exists.
/// Commutation is imposed against a generating set; an infeasible answer is
/// re-solved against the full basis so the reported residual is that of the
/// complete system.
inline DiagonalSolve solve_diagonal(const MatrixAlgebra& a, const ToleranceConfig& cfg) {
  cfg.validate();
  const MultiplicationTable t = multiplication_table(a);
  std::vector<CVector> gens;
  for (const auto& g : generating_set(a, cfg)) gens.push_back(a.coords(g));
  LeastSquares ls = detail::solve_diagonal_system(t, std::span<const CVector>(gens), cfg.rank_tol);

  DiagonalSolve out;
  out.residual = ls.residual;
  out.solution_norm = ls.x.norm();
  if (ls.residual <= cfg.verify_tol) {
    const CMatrix c = unvec(ls.x, a.dim(), a.dim());
    TensorElement u = tensor_from_coefficients(a, c, cfg);
    if (is_diagonal(a, u, cfg).verdict) {
      out.diagonal = std::move(u);
      return out;
    }
  }
  if (static_cast<Index>(gens.size()) < a.dim()) {
    std::vector<CVector> all;
    for (Index k = 0; k < a.dim(); ++k) all.push_back(CVector::Unit(a.dim(), k));
    const LeastSquares full = detail::solve_diagonal_system(t, std::span<const CVector>(all), cfg.rank_tol);
    out.residual = std::max(out.residual, full.residual);
    out.solution_norm = full.x.norm();
  }
  return out;
}

/// u = 1 (x) 1 - w for a witness w in the kernel of multiplication.
inline TensorElement diagonal_from_witness(const MatrixAlgebra& a, const TensorElement& w, const ToleranceConfig& cfg) {
  check_tensor(w);
  if (w.n != a.ambient_dim()) throw Error(Errc::DimensionMismatch, "witness and algebra sizes differ");
  const double m = multiply(w).norm();
  if (m > cfg.verify_tol) throw Error(Errc::WitnessNotInKernel, "||m(w)|| = " + std::to_string(m));
  return unit_tensor(a.ambient_dim()) - w;
}

}  // namespace opdiag

#endif
