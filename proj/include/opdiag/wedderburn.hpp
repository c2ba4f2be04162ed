#ifndef OPDIAG_WEDDERBURN_HPP
#define OPDIAG_WEDDERBURN_HPP

// Block diagonalisation of a semisimple A in M_n by similarity: split off
// an invariant subspace with y = 1 + x, compress to the two corners,
// recurse until every corner is a full matrix algebra.

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "opdiag/cohomology.hpp"

namespace opdiag {

struct InvariantProjection {
  bool irreducible = false;
  CMatrix p;      ///< orthogonal projection, n x n
  CMatrix range;  ///< orthonormal columns spanning ran p
  double invariance_residual = 0.0;  ///< max_k ||(1 - p) e_k p||
};

namespace detail {

inline double invariance_residual(const MatrixAlgebra& a, const CMatrix& v) {
  const Index n = a.ambient_dim();
  const CMatrix comp = identity(n) - v * v.adjoint();
  double worst = 0.0;
  for (Index k = 0; k < a.dim(); ++k) worst = std::max(worst, op_norm(comp * a.basis(k) * v));
  return worst;
}

// Groups eigenvalues whose chains of pairwise distances stay within gap;
// returns the members of the group holding the lexicographically smallest
// eigenvalue.
inline std::vector<Index> smallest_cluster(const CVector& ev, double gap) {
  const Index m = ev.size();
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Index i, Index j) {
    if (ev(i).real() != ev(j).real()) return ev(i).real() < ev(j).real();
    return ev(i).imag() < ev(j).imag();
  });
  std::vector<Index> cluster{order[0]};
  std::vector<bool> taken(static_cast<std::size_t>(m), false);
  taken[static_cast<std::size_t>(order[0])] = true;
  for (std::size_t head = 0; head < cluster.size(); ++head)
    for (Index j = 0; j < m; ++j)
      if (!taken[static_cast<std::size_t>(j)] && std::abs(ev(j) - ev(cluster[head])) <= gap) {
        taken[static_cast<std::size_t>(j)] = true;
        cluster.push_back(j);
      }
  return cluster;
}

}  // namespace detail

/// Orthogonal projection onto an A-invariant subspace, taken from an
/// eigenspace of a random element of the commutant.
inline InvariantProjection invariant_projection(const MatrixAlgebra& a, const ToleranceConfig& cfg) {
  cfg.validate();
  InvariantProjection out;
  const Index n = a.ambient_dim();
  if (a.dim() == n * n) {
    out.irreducible = true;
    return out;
  }
  const MatrixAlgebra comm = commutant(a, cfg);
  if (comm.dim() <= 1) throw Error(Errc::NoNonScalarCommutant, "reducible algebra with scalar commutant");
  auto rng = make_rng(cfg, 0x70726f6aULL);
  CMatrix c = random_element(comm, rng);
  c -= (c.trace() / static_cast<double>(n)) * identity(n);
  const double cn = op_norm(c);
  const double gap = std::max(cfg.verify_tol, 1e-8) * cn;
  Eigen::ComplexEigenSolver<CMatrix> es(c, false);
  const auto cluster = detail::smallest_cluster(es.eigenvalues(), gap);
  cplx lambda = 0;
  for (Index i : cluster) lambda += es.eigenvalues()(i);
  lambda /= static_cast<double>(cluster.size());

  const CMatrix shifted = c - lambda * identity(n);
  Eigen::JacobiSVD<CMatrix> svd(shifted, Eigen::ComputeFullV);
  const Index mult = static_cast<Index>(cluster.size());
  CMatrix v = svd.matrixV().rightCols(mult);
  double res = detail::invariance_residual(a, v);
  if (res > cfg.verify_tol || mult == n) {
    // not diagonalisable on this cluster: fall back to the geometric kernel
    const Index rk = numerical_rank(svd.singularValues(), std::max(cfg.verify_tol, 1e-8), cn);
    v = svd.matrixV().rightCols(n - rk);
    res = detail::invariance_residual(a, v);
  }
  if (v.cols() == 0 || v.cols() == n)
    throw Error(Errc::NoNonScalarCommutant, "commutant element has no proper eigenspace");
  out.range = v;
  out.p = v * v.adjoint();
  out.invariance_residual = res;
  return out;
}

struct SplitStep {
  CMatrix x;      ///< p x (1 - p) = x
  CMatrix y;      ///< 1 + x
  CMatrix y_inv;  ///< 1 - x
  MatrixAlgebra a_new;
  double inner_residual = 0.0;
  std::optional<double> witness_residual;  ///< when a diagonal was supplied
  std::optional<double> witness_gap;       ///< witness x minus solved x, as a derivation
  double commutation_residual = 0.0;       ///< max over a basis of A_new of ||p a (1-p)||, ||(1-p) a p||
  double x_squared = 0.0;
  double inverse_residual = 0.0;
};

/// The corner bimodule p M_n (1 - p) in coordinates Z with x = V Z W*,
/// where V, W are orthonormal frames of ran p and ran (1 - p).
inline Bimodule corner_bimodule(const MatrixAlgebra& a, const CMatrix& v, const CMatrix& w) {
  std::vector<CMatrix> r1, r2;
  for (const auto& e : a.basis()) {
    r1.push_back(v.adjoint() * e * v);
    r2.push_back(w.adjoint() * e * w);
  }
  return bimodule_from_representations(std::span<const CMatrix>(r1), std::span<const CMatrix>(r2));
}

/// One conjugation y A y^{-1} that makes ran(v) reducing for A.
inline SplitStep split_step(const MatrixAlgebra& a, const TensorElement* u, const CMatrix& v, const ToleranceConfig& cfg) {
  const Index n = a.ambient_dim();
  const Index r1 = v.cols();
  CMatrix w;
  {
    Eigen::HouseholderQR<CMatrix> qr(v);
    const CMatrix q = qr.householderQ() * identity(n);
    w = q.rightCols(n - r1);
  }
  const CMatrix p = v * v.adjoint();
  const double inv_res = detail::invariance_residual(a, v);
  if (inv_res > cfg.verify_tol)
    throw Error(Errc::WitnessSolveFailed, "projection is not invariant, residual " + std::to_string(inv_res));

  const Bimodule x = corner_bimodule(a, v, w);
  Derivation delta;
  delta.D.resize(x.dim, a.dim());
  for (Index k = 0; k < a.dim(); ++k) delta.D.col(k) = vec(CMatrix(v.adjoint() * a.basis(k) * w));

  SplitStep s;
  const InnerSolve inner = solve_inner(a, x, delta, cfg);
  s.inner_residual = inner.residual;
  std::optional<CVector> z = inner.x;
  if (u != nullptr) {
    const Witness wit = witness_from_diagonal(a, *u, x, delta, cfg);
    s.witness_residual = wit.residual;
    if (z) {
      const Derivation gap = inner_derivation(x, wit.x - *z);
      s.witness_gap = gap.D.norm();
    } else if (wit.residual <= cfg.verify_tol) {
      z = wit.x;
    }
  }
  if (!z)
    throw Error(Errc::WitnessSolveFailed, "corner derivation is not inner, residual " + std::to_string(inner.residual));

  s.x = v * unvec(*z, r1, n - r1) * w.adjoint();
  s.y = identity(n) + s.x;
  s.y_inv = identity(n) - s.x;
  s.x_squared = (s.x * s.x).norm();
  s.inverse_residual = (s.y * s.y_inv - identity(n)).norm();

  std::vector<CMatrix> conj;
  for (const auto& e : a.basis()) conj.push_back(s.y * e * s.y_inv);
  s.a_new = span_algebra(n, std::span<const CMatrix>(conj), cfg);
  const CMatrix q = identity(n) - p;
  for (Index k = 0; k < s.a_new.dim(); ++k) {
    const CMatrix e = s.a_new.basis(k);
    s.commutation_residual = std::max({s.commutation_residual, (p * e * q).norm(), (q * e * p).norm()});
  }
  if (s.a_new.dim() != a.dim() || s.commutation_residual > cfg.verify_tol)
    throw Error(Errc::CommutationCheckFailed, "residual " + std::to_string(s.commutation_residual));
  return s;
}

struct SignatureClass {
  Index size = 0;
  std::vector<Index> blocks;
};

struct DecompositionResult {
  CMatrix conjugator;  ///< T with T A T^{-1} block diagonal
  std::vector<Index> block_sizes;
  std::vector<std::vector<CMatrix>> block_maps;  ///< block_maps[i][k] = pi_i(e_k)
  std::vector<Index> signature;                  ///< one size per simple summand, descending
  std::vector<SignatureClass> classes;
  std::vector<Index> block_dims;            ///< dim pi_i(A)
  std::vector<double> split_residuals;      ///< p-commutation residual of every split
  std::vector<double> witness_residuals;    ///< witness-formula residual of every split
  double off_block_residual = 0.0;
  double conjugator_condition = 1.0;
  int depth = 0;

  bool burnside_ok() const {
    for (std::size_t i = 0; i < block_sizes.size(); ++i)
      if (block_dims[i] != block_sizes[i] * block_sizes[i]) return false;
    return true;
  }
};

namespace detail {

struct Split {
  CMatrix t;
  std::vector<Index> blocks;
  std::vector<double> residuals;
  std::vector<double> witness;
  int depth = 0;
};

inline MatrixAlgebra corner(const MatrixAlgebra& a, Index off, Index size, const ToleranceConfig& cfg) {
  std::vector<CMatrix> mats;
  for (Index k = 0; k < a.dim(); ++k) mats.push_back(a.basis(k).block(off, off, size, size));
  return span_algebra(size, std::span<const CMatrix>(mats), cfg);
}

inline TensorElement corner(const TensorElement& u, Index off, Index size, const ToleranceConfig& cfg) {
  TensorElement out(size);
  for (const auto& t : u.terms) out.add(t.a.block(off, off, size, size), t.b.block(off, off, size, size));
  return reduce_representation(out, cfg);
}

inline Split split_recursive(const MatrixAlgebra& a, const std::optional<TensorElement>& u, int depth, int max_depth,
                             const ToleranceConfig& cfg) {
  if (depth > max_depth) throw Error(Errc::RecursionDepthExceeded, "depth " + std::to_string(depth));
  const Index n = a.ambient_dim();
  Split out;
  out.depth = depth;
  const InvariantProjection proj = invariant_projection(a, cfg);
  if (proj.irreducible) {
    out.t = identity(n);
    out.blocks = {n};
    return out;
  }
  // rotate so that p = diag(1, 0)
  const Index r1 = proj.range.cols();
  CMatrix rot(n, n);
  {
    Eigen::HouseholderQR<CMatrix> qr(proj.range);
    const CMatrix q = qr.householderQ() * identity(n);
    rot << proj.range, q.rightCols(n - r1);
  }
  CMatrix frame(n * n, a.dim());
  for (Index k = 0; k < a.dim(); ++k) frame.col(k) = vec(CMatrix(rot.adjoint() * a.basis(k) * rot));
  const MatrixAlgebra rotated(n, std::move(frame));
  std::optional<TensorElement> u_rot;
  if (u) {
    u_rot = TensorElement(n);
    for (const auto& t : u->terms) u_rot->add(rot.adjoint() * t.a * rot, rot.adjoint() * t.b * rot);
  }
  CMatrix v = CMatrix::Zero(n, r1);
  v.topRows(r1).setIdentity();
  const SplitStep step = split_step(rotated, u_rot ? &*u_rot : nullptr, v, cfg);
  out.residuals.push_back(step.commutation_residual);
  if (step.witness_residual) out.witness.push_back(*step.witness_residual);

  std::optional<TensorElement> u_new;
  if (u_rot) {
    u_new = TensorElement(n);
    for (const auto& t : u_rot->terms) u_new->add(step.y * t.a * step.y_inv, step.y * t.b * step.y_inv);
  }
  const Index r2 = n - r1;
  const MatrixAlgebra top = corner(step.a_new, 0, r1, cfg);
  const MatrixAlgebra bottom = corner(step.a_new, r1, r2, cfg);
  std::optional<TensorElement> u_top, u_bottom;
  if (u_new) {
    u_top = corner(*u_new, 0, r1, cfg);
    u_bottom = corner(*u_new, r1, r2, cfg);
  }
  const Split s1 = split_recursive(top, u_top, depth + 1, max_depth, cfg);
  const Split s2 = split_recursive(bottom, u_bottom, depth + 1, max_depth, cfg);
  CMatrix blk = CMatrix::Zero(n, n);
  blk.topLeftCorner(r1, r1) = s1.t;
  blk.bottomRightCorner(r2, r2) = s2.t;
  out.t = blk * step.y * rot.adjoint();
  out.blocks = s1.blocks;
  out.blocks.insert(out.blocks.end(), s2.blocks.begin(), s2.blocks.end());
  for (const Split* s : {&s1, &s2}) {
    out.residuals.insert(out.residuals.end(), s->residuals.begin(), s->residuals.end());
    out.witness.insert(out.witness.end(), s->witness.begin(), s->witness.end());
    out.depth = std::max(out.depth, s->depth);
  }
  return out;
}

inline std::vector<Index> block_offsets(const std::vector<Index>& sizes) {
  std::vector<Index> off(sizes.size(), 0);
  for (std::size_t i = 1; i < sizes.size(); ++i) off[i] = off[i - 1] + sizes[i - 1];
  return off;
}

// Rows: vec(pi_i(e_k)) for each basis k, so the matrix maps A-coordinates
// to the block.
inline CMatrix block_matrix(const std::vector<CMatrix>& images) {
  const Index m = images.empty() ? 0 : images[0].size();
  CMatrix out(m, static_cast<Index>(images.size()));
  for (std::size_t k = 0; k < images.size(); ++k) out.col(static_cast<Index>(k)) = vec(images[k]);
  return out;
}

}  // namespace detail

/// Groups blocks that carry the same simple summand: blocks i and j are
/// equivalent when pi_j vanishes on ker pi_i. Anything between vanishing
/// and full image is reported as DichotomyViolation.
inline std::vector<SignatureClass> signature_classes(const MatrixAlgebra& a, const DecompositionResult& r,
                                                     const ToleranceConfig& cfg) {
  const std::size_t nb = r.block_sizes.size();
  const double sep = std::sqrt(cfg.verify_tol);
  std::vector<CMatrix> maps, kernels;
  std::vector<double> scale;
  for (std::size_t i = 0; i < nb; ++i) {
    maps.push_back(detail::block_matrix(r.block_maps[i]));
    scale.push_back(std::max(op_norm(maps.back()), 1e-300));
    kernels.push_back(nullspace(maps.back(), cfg.rank_tol, 0.0));
  }
  std::vector<std::size_t> parent(nb);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      if (i == j) continue;
      bool zero = true;
      if (kernels[i].cols() > 0) {
        const Eigen::VectorXd sv = singular_values(maps[j] * kernels[i]);
        const Index full = r.block_sizes[j] * r.block_sizes[j];
        zero = sv(0) <= sep * scale[j];
        const bool is_full = sv.size() >= full && sv(full - 1) > sep * scale[j];
        if (!zero && !is_full)
          throw Error(Errc::DichotomyViolation, "block " + std::to_string(j) + " on kernel of block " +
                                                    std::to_string(i) + ": largest " + std::to_string(sv(0) / scale[j]));
      }
      if (zero) parent[find(i)] = find(j);
    }
  std::vector<SignatureClass> classes;
  std::vector<long> slot(nb, -1);
  for (std::size_t i = 0; i < nb; ++i) {
    const std::size_t root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<long>(classes.size());
      classes.push_back({r.block_sizes[i], {}});
    }
    classes[static_cast<std::size_t>(slot[root])].blocks.push_back(static_cast<Index>(i));
  }
  (void)a;
  return classes;
}

inline std::vector<Index> signature(const MatrixAlgebra& a, const DecompositionResult& r, const ToleranceConfig& cfg) {
  std::vector<Index> sizes;
  for (const auto& c : signature_classes(a, r, cfg)) sizes.push_back(c.size);
  std::sort(sizes.rbegin(), sizes.rend());
  return sizes;
}

/// Wedderburn decomposition by repeated invariant splits. With a diagonal,
/// every split also evaluates the witness formula against it.
inline DecompositionResult decompose(const MatrixAlgebra& a, const std::optional<TensorElement>& u, const ToleranceConfig& cfg) {
  cfg.validate();
  const Index n = a.ambient_dim();
  std::optional<TensorElement> ur;
  if (u) {
    const DiagonalReport rep = is_diagonal(a, *u, cfg);
    if (!rep.verdict)
      throw Error(Errc::DiagonalInvalid, "unit residual " + std::to_string(rep.unit_residual) +
                                             ", commutation residual " + std::to_string(rep.commutation_residual));
    ur = reduce_representation(*u, cfg);
  }
  const detail::Split s = detail::split_recursive(a, ur, 0, static_cast<int>(n), cfg);

  DecompositionResult r;
  r.conjugator = s.t;
  r.block_sizes = s.blocks;
  r.split_residuals = s.residuals;
  r.witness_residuals = s.witness;
  r.depth = s.depth;
  r.conjugator_condition = condition_number(s.t);
  const CMatrix t_inv = s.t.inverse();
  const auto off = detail::block_offsets(r.block_sizes);
  r.block_maps.assign(r.block_sizes.size(), {});
  for (Index k = 0; k < a.dim(); ++k) {
    const CMatrix c = s.t * a.basis(k) * t_inv;
    CMatrix rest = c;
    for (std::size_t i = 0; i < r.block_sizes.size(); ++i) {
      r.block_maps[i].push_back(c.block(off[i], off[i], r.block_sizes[i], r.block_sizes[i]));
      rest.block(off[i], off[i], r.block_sizes[i], r.block_sizes[i]).setZero();
    }
    r.off_block_residual = std::max(r.off_block_residual, rest.norm() / c.norm());
  }
  for (std::size_t i = 0; i < r.block_sizes.size(); ++i)
    r.block_dims.push_back(rank(detail::block_matrix(r.block_maps[i]), cfg.rank_tol, 0.0));
  r.classes = signature_classes(a, r, cfg);
  for (const auto& c : r.classes) r.signature.push_back(c.size);
  std::sort(r.signature.rbegin(), r.signature.rend());
  return r;
}

}  // namespace opdiag

#endif
