#ifndef OPDIAG_LINALG_HPP
#define OPDIAG_LINALG_HPP

// Dense complex linear algebra shared by every module: vectorisation,
// rank-revealing factorisations and minimum-norm least squares.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace opdiag {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Column-major vectorisation; vec(a x b) = (b^T kron a) vec(x).
inline CVector vec(const CMatrix& m) { return Eigen::Map<const CVector>(m.data(), m.size()); }

inline CMatrix unvec(const CVector& v, Index rows, Index cols) {
  return Eigen::Map<const CMatrix>(v.data(), rows, cols);
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline CMatrix identity(Index n) { return CMatrix::Identity(n, n); }

inline CMatrix matrix_unit(Index n, Index i, Index j) {
  CMatrix e = CMatrix::Zero(n, n);
  e(i, j) = 1.0;
  return e;
}

inline Eigen::VectorXd singular_values(const CMatrix& m) {
  if (m.size() == 0) return Eigen::VectorXd();
  return Eigen::BDCSVD<CMatrix>(m).singularValues();
}

/// Operator (spectral) norm.
inline double op_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == m.cols() && m.rows() <= 4) {
    // small Hermitian Gram matrix is cheaper than an SVD
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m.adjoint() * m, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  }
  return singular_values(m)(0);
}

/// Largest eigenvalue of a Hermitian matrix.
inline double hermitian_max_eigenvalue(const CMatrix& h) {
  if (h.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline double condition_number(const CMatrix& m) {
  const Eigen::VectorXd s = singular_values(m);
  if (s.size() == 0) return 1.0;
  const double smin = s(s.size() - 1);
  return smin > 0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

/// Number of singular values strictly above rank_tol * max(sigma_max, floor).
inline Index numerical_rank(const Eigen::VectorXd& sv, double rank_tol, double floor = 0.0) {
  if (sv.size() == 0) return 0;
  const double scale = std::max(sv(0), floor);
  if (scale <= 0) return 0;
  Index r = 0;
  while (r < sv.size() && sv(r) > rank_tol * scale) ++r;
  return r;
}

namespace detail {

// Reduce a tall matrix to its square triangular factor; singular values and
// right singular vectors are unchanged.
inline CMatrix compress_rows(const CMatrix& m) {
  if (m.rows() <= m.cols()) return m;
  Eigen::HouseholderQR<CMatrix> qr(m);
  return qr.matrixQR().topRows(m.cols()).triangularView<Eigen::Upper>();
}

}  // namespace detail

inline Index rank(const CMatrix& m, double rank_tol, double floor = 0.0) {
  if (m.size() == 0) return 0;
  return numerical_rank(singular_values(detail::compress_rows(m)), rank_tol, floor);
}

/// Orthonormal basis (columns) of the null space of m.
inline CMatrix nullspace(const CMatrix& m, double rank_tol, double floor = 0.0) {
  const Index n = m.cols();
  if (n == 0) return CMatrix(0, 0);
  if (m.rows() == 0) return identity(n);
  CMatrix r = detail::compress_rows(m);
  if (r.rows() < n) {
    CMatrix padded = CMatrix::Zero(n, n);
    padded.topRows(r.rows()) = r;
    r.swap(padded);
  }
  Eigen::BDCSVD<CMatrix> svd(r, Eigen::ComputeFullV);
  const Index k = numerical_rank(svd.singularValues(), rank_tol, floor);
  return svd.matrixV().rightCols(n - k);
}

/// Orthonormal basis (columns) of the column space of m.
inline CMatrix orthonormal_range(const CMatrix& m, double rank_tol, double floor = 0.0) {
  if (m.cols() == 0 || m.rows() == 0) return CMatrix(m.rows(), 0);
  Eigen::BDCSVD<CMatrix> svd(m, Eigen::ComputeThinU);
  const Index k = numerical_rank(svd.singularValues(), rank_tol, floor);
  return svd.matrixU().leftCols(k);
}

struct LeastSquares {
  CVector x;
  double residual = 0.0;  ///< ||M x - b||_2 at the returned x
  Index rank = 0;
};

/// Minimum-norm least-squares solution with a relative rank cut.
inline LeastSquares min_norm_least_squares(const CMatrix& m, const CVector& b, double rank_tol) {
  LeastSquares out;
  const Index n = m.cols();
  if (n == 0) {
    out.x = CVector(0);
    out.residual = b.norm();
    return out;
  }
  CMatrix r;
  CVector rhs;
  if (m.rows() > n) {
    Eigen::HouseholderQR<CMatrix> qr(m);
    const CVector qb = qr.householderQ().adjoint() * b;
    r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    rhs = qb.head(n);
  } else {
    r = m;
    rhs = b;
  }
  Eigen::CompleteOrthogonalDecomposition<CMatrix> cod;
  cod.setThreshold(rank_tol);
  cod.compute(r);
  out.rank = cod.rank();
  out.x = out.rank > 0 ? CVector(cod.solve(rhs)) : CVector(CVector::Zero(n));
  out.residual = (m * out.x - b).norm();
  return out;
}

/// Orthonormalise the columns of m against an existing orthonormal basis q,
/// returning only the genuinely new directions.
inline CMatrix extend_orthonormal(const CMatrix& q, const CMatrix& m, double rank_tol, double floor) {
  if (m.cols() == 0) return CMatrix(m.rows(), 0);
  CMatrix resid = m;
  for (int pass = 0; pass < 2; ++pass)
    if (q.cols() > 0) resid -= q * (q.adjoint() * resid);
  CMatrix fresh = orthonormal_range(resid, rank_tol, floor);
  if (fresh.cols() == 0) return fresh;
  if (q.cols() > 0) fresh -= q * (q.adjoint() * fresh);
  Eigen::HouseholderQR<CMatrix> qr(fresh);
  return qr.householderQ() * CMatrix::Identity(fresh.rows(), fresh.cols());
}

/// Largest principal-angle sine between two subspaces given by orthonormal
/// columns; 0 when they coincide.
inline double subspace_distance(const CMatrix& q1, const CMatrix& q2) {
  if (q1.cols() != q2.cols()) return 1.0;
  if (q1.cols() == 0) return 0.0;
  const double d1 = op_norm(q1 - q2 * (q2.adjoint() * q1));
  const double d2 = op_norm(q2 - q1 * (q1.adjoint() * q2));
  return std::max(d1, d2);
}

inline cplx complex_gaussian(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const double re = g(rng);
  const double im = g(rng);
  return {re, im};
}

inline CMatrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  CMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = complex_gaussian(rng);
  return m;
}

inline CMatrix random_unitary(Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<CMatrix> qr(random_matrix(n, n, rng));
  return qr.householderQ() * identity(n);
}

}  // namespace opdiag

#endif
