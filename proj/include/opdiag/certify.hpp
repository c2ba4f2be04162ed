#ifndef OPDIAG_CERTIFY_HPP
#define OPDIAG_CERTIFY_HPP

// Finite spanning certificates: from a diagonal u = sum a_i (x) b_i of A,
// exhibit B = span{c a_j b_i} together with every constant of the
// approximation chain x ~ sum_j sum_i phi_j(x a_i) c a_j b_i, and show
// B = A.

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "opdiag/norms.hpp"

namespace opdiag {

/// phi(x) = trace(frame* x)
struct Functional {
  CMatrix frame;

  cplx operator()(const CMatrix& x) const { return frame.conjugate().cwiseProduct(x).sum(); }
};

struct SpanningCertificate {
  Index M = 0;
  CMatrix c;
  double k = 0.0;
  double epsilon = 0.0;
  std::vector<Functional> functionals;
  Index N = 0;
  std::vector<CMatrix> spanning_family;  ///< c a_j b_i, j-major
  double beta = 0.0;
  Index family_rank = 0;
  double proximity = 0.0;  ///< max_j ||(phi_j(a_i))_i - e_j||_2
  std::optional<Index> min_M_over_permutations;
};

struct CertifyOptions {
  bool fuzz = false;
  int permutation_trials = 0;
};

namespace detail {

inline bool independent_factors(const TensorElement& u, const ToleranceConfig& cfg) {
  const auto r = static_cast<Index>(u.size());
  return rank(u.left_frame(), cfg.rank_tol) == r && rank(u.right_frame(), cfg.rank_tol) == r;
}

/// The representation a certificate is built on: u itself when its factors
/// are independent, its reduction otherwise.
inline TensorElement certificate_representation(const TensorElement& u, const ToleranceConfig& cfg) {
  return independent_factors(u, cfg) ? u : reduce_representation(u, cfg);
}

/// Smallest M with ||sum_{i<=M} a_i b_i - 1|| < 1/2, the inequality required
/// with margin `margin` so that rounding cannot flip it.
inline Index partial_sum_cutoff(const TensorElement& u, double margin) {
  CMatrix s = CMatrix::Zero(u.n, u.n);
  const CMatrix id = identity(u.n);
  for (std::size_t i = 0; i < u.size(); ++i) {
    s += u.terms[i].a * u.terms[i].b;
    if (op_norm(s - id) < 0.5 - margin) return static_cast<Index>(i + 1);
  }
  return 0;
}

inline CMatrix partial_sum(const TensorElement& u, Index m) {
  CMatrix s = CMatrix::Zero(u.n, u.n);
  for (Index i = 0; i < m; ++i) s += u.terms[static_cast<std::size_t>(i)].a * u.terms[static_cast<std::size_t>(i)].b;
  return s;
}

inline Eigen::VectorXcd functional_coordinates(const Functional& f, const TensorElement& u) {
  Eigen::VectorXcd v(static_cast<Index>(u.size()));
  for (std::size_t i = 0; i < u.size(); ++i) v(static_cast<Index>(i)) = f(u.terms[i].a);
  return v;
}

inline double proximity(const SpanningCertificate& cert, const TensorElement& u) {
  double worst = 0.0;
  for (Index j = 0; j < static_cast<Index>(cert.functionals.size()); ++j) {
    Eigen::VectorXcd v = functional_coordinates(cert.functionals[static_cast<std::size_t>(j)], u);
    v(j) -= 1.0;
    worst = std::max(worst, v.norm());
  }
  return worst;
}

// sum_j sum_i phi_j(x a_i) c a_j b_i
inline CMatrix approximant(const SpanningCertificate& cert, const TensorElement& u, const CMatrix& x) {
  CMatrix y = CMatrix::Zero(u.n, u.n);
  for (Index j = 0; j < cert.M; ++j)
    for (Index i = 0; i < cert.N; ++i) {
      const cplx w = cert.functionals[static_cast<std::size_t>(j)](x * u.terms[static_cast<std::size_t>(i)].a);
      y += w * cert.spanning_family[static_cast<std::size_t>(j * cert.N + i)];
    }
  return y;
}

inline double quotient_bound(const SpanningCertificate& cert, const MatrixAlgebra& a, const TensorElement& u) {
  double beta = 0.0;
  for (const auto& x : a.basis()) beta = std::max(beta, op_norm(x - approximant(cert, u, x)) / op_norm(x));
  return beta;
}

inline Index family_rank(const std::vector<CMatrix>& family, Index n, const ToleranceConfig& cfg) {
  if (family.empty()) return 0;
  CMatrix f(n * n, static_cast<Index>(family.size()));
  for (std::size_t i = 0; i < family.size(); ++i) f.col(static_cast<Index>(i)) = vec(family[i]);
  return rank(f, cfg.rank_tol);
}

}  // namespace detail

/// Builds the certificate for a diagonal u of A, using the term order of u.
inline SpanningCertificate build_certificate(const MatrixAlgebra& a, const TensorElement& u, const ToleranceConfig& cfg,
                                             const CertifyOptions& opts = {}) {
  cfg.validate();
  check_tensor(u);
  const DiagonalReport dr = is_diagonal(a, u, cfg);
  if (!dr.verdict)
    throw Error(Errc::DiagonalInvalid, "unit residual " + std::to_string(dr.unit_residual) + ", commutation residual " +
                                           std::to_string(dr.commutation_residual));
  const TensorElement rep = detail::certificate_representation(u, cfg);
  const Index n = rep.n;
  const auto r = static_cast<Index>(rep.size());

  SpanningCertificate cert;
  cert.M = detail::partial_sum_cutoff(rep, cfg.verify_tol);
  if (cert.M == 0) throw Error(Errc::BoundViolated, "no partial sum within 1/2 of the unit");
  cert.c = detail::partial_sum(rep, cert.M).inverse();
  const auto [fa, fb] = haagerup_factors(rep);
  cert.k = std::max(fa, fb);
  cert.epsilon = 1.0 / (8.0 * static_cast<double>(cert.M) * cert.k * cert.k);
  cert.N = r;

  // exact dual functionals f_j = G (G* G)^{-1} v_j with v_j = e_j, or e_j + p
  // with ||p|| < eps / 2 in fuzz mode
  const CMatrix g = rep.left_frame();
  const CMatrix gram_inv = (g.adjoint() * g).inverse();
  auto rng = make_rng(cfg, 0x63657274ULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Index j = 0; j < cert.M; ++j) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Unit(r, j);
    if (opts.fuzz) {
      Eigen::VectorXcd p(r);
      for (Index i = 0; i < r; ++i) p(i) = complex_gaussian(rng);
      v += (0.5 * cert.epsilon * unif(rng) / p.norm()) * p.conjugate();
    }
    cert.functionals.push_back({unvec(g * (gram_inv * v), n, n)});
  }
  for (Index j = 0; j < cert.M; ++j)
    for (Index i = 0; i < cert.N; ++i)
      cert.spanning_family.push_back(cert.c * rep.terms[static_cast<std::size_t>(j)].a * rep.terms[static_cast<std::size_t>(i)].b);

  cert.proximity = detail::proximity(cert, rep);
  cert.beta = detail::quotient_bound(cert, a, rep);
  cert.family_rank = detail::family_rank(cert.spanning_family, n, cfg);

  if (opts.permutation_trials > 0) {
    Index best = cert.M;
    std::vector<std::size_t> order(rep.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int t = 0; t < opts.permutation_trials; ++t) {
      std::shuffle(order.begin(), order.end(), rng);
      TensorElement perm(n);
      for (const std::size_t i : order) perm.terms.push_back(rep.terms[i]);
      const Index m = detail::partial_sum_cutoff(perm, cfg.verify_tol);
      if (m > 0) best = std::min(best, m);
    }
    cert.min_M_over_permutations = best;
  }

  if (!(cert.beta <= 0.5))
    throw Error(Errc::BoundViolated, "quotient bound " + std::to_string(cert.beta) + " exceeds 1/2");
  if (cert.family_rank != a.dim())
    throw Error(Errc::BoundViolated,
                "spanning family has rank " + std::to_string(cert.family_rank) + ", algebra dimension " + std::to_string(a.dim()));
  return cert;
}

struct CertificateCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct CertificateReport {
  std::vector<CertificateCheck> checks;

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const CertificateCheck& c) { return c.pass; });
  }
  const CertificateCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

/// Recomputes every invariant of the certificate from A and u. Never throws
/// on a bad certificate; each failure shows up as a failed check.
inline CertificateReport verify_certificate(const MatrixAlgebra& a, const TensorElement& u, const SpanningCertificate& cert,
                                            const ToleranceConfig& cfg) {
  cfg.validate();
  CertificateReport rep;
  auto add = [&](std::string name, double value, double bound, bool pass) {
    rep.checks.push_back({std::move(name), value, bound, pass});
  };
  const double tol = cfg.verify_tol;

  bool diag = false;
  try {
    const DiagonalReport dr = is_diagonal(a, u, cfg);
    add("diagonal", std::max(dr.unit_residual, dr.commutation_residual), tol, dr.verdict);
    diag = dr.verdict;
  } catch (const Error&) {
    add("diagonal", std::numeric_limits<double>::infinity(), tol, false);
  }
  if (!diag) return rep;
  const TensorElement v = detail::certificate_representation(u, cfg);
  const Index n = v.n;
  const auto r = static_cast<Index>(v.size());

  const bool shape = cert.M >= 1 && cert.M <= r && cert.N == r && cert.c.rows() == n && cert.c.cols() == n &&
                     static_cast<Index>(cert.functionals.size()) == cert.M &&
                     static_cast<Index>(cert.spanning_family.size()) == cert.M * cert.N &&
                     std::all_of(cert.functionals.begin(), cert.functionals.end(),
                                 [&](const Functional& f) { return f.frame.rows() == n && f.frame.cols() == n; }) &&
                     std::all_of(cert.spanning_family.begin(), cert.spanning_family.end(),
                                 [&](const CMatrix& m) { return m.rows() == n && m.cols() == n; });
  add("shape", shape ? 0.0 : 1.0, 0.0, shape);
  if (!shape) return rep;

  const CMatrix s = detail::partial_sum(v, cert.M);
  const double head = op_norm(s - identity(n));
  add("partial_sum", head, 0.5, head < 0.5);
  const Index cutoff = detail::partial_sum_cutoff(v, tol);
  add("cutoff_minimal", static_cast<double>(cutoff), static_cast<double>(cert.M), cutoff == cert.M);
  const double inv = (cert.c * s - identity(n)).norm();
  add("c_inverse", inv, tol, inv <= tol);
  const double cn = op_norm(cert.c);
  add("c_norm", cn, 2.0, cn < 2.0);

  const auto [fa, fb] = haagerup_factors(v);
  const double k = std::max(fa, fb);
  const double kdiff = std::abs(k - cert.k) / std::max(1.0, k);
  add("k", kdiff, 1e-12, kdiff <= 1e-12);
  const double eps = 1.0 / (8.0 * static_cast<double>(cert.M) * cert.k * cert.k);
  add("epsilon", std::abs(cert.epsilon - eps), 0.0, cert.epsilon == eps);
  double amax = 0.0;
  for (const auto& t : v.terms) amax = std::max(amax, op_norm(t.a));
  add("factor_bound", amax, cert.k * (1.0 + tol), amax <= cert.k * (1.0 + tol));

  const double prox = detail::proximity(cert, v);
  add("proximity", prox, cert.epsilon, prox < cert.epsilon);

  double fam = 0.0;
  bool in_algebra = true;
  for (Index j = 0; j < cert.M; ++j)
    for (Index i = 0; i < cert.N; ++i) {
      const CMatrix& m = cert.spanning_family[static_cast<std::size_t>(j * cert.N + i)];
      fam = std::max(fam, (m - cert.c * v.terms[static_cast<std::size_t>(j)].a * v.terms[static_cast<std::size_t>(i)].b).norm());
      in_algebra = in_algebra && membership(a, m, cfg).member();
    }
  add("family_entries", fam, tol, fam <= tol);
  add("family_in_algebra", in_algebra ? 0.0 : 1.0, 0.0, in_algebra);

  // per-element chain on a basis of A
  double r8 = 0.0, r10 = 0.0, r11 = 0.0;
  const double slack = 1.0 + tol;
  for (const auto& x : a.basis()) {
    const double nx = op_norm(x);
    CMatrix chain = CMatrix::Zero(n, n);
    for (Index j = 0; j < cert.M; ++j) {
      const auto& fj = cert.functionals[static_cast<std::size_t>(j)];
      const CMatrix& aj = v.terms[static_cast<std::size_t>(j)].a;
      const CMatrix& bj = v.terms[static_cast<std::size_t>(j)].b;
      CMatrix e8 = bj * x, e10 = bj * x;
      for (Index i = 0; i < r; ++i) {
        const auto& t = v.terms[static_cast<std::size_t>(i)];
        e8 -= fj(t.a) * t.b * x;
        e10 -= fj(x * t.a) * t.b;
      }
      r8 = std::max(r8, op_norm(e8) / (cert.epsilon * cert.k * nx));
      r10 = std::max(r10, op_norm(e10) / (2.0 * cert.epsilon * cert.k * nx));
      chain += aj * e10;
    }
    r11 = std::max(r11, op_norm(chain) / (2.0 * cert.epsilon * static_cast<double>(cert.M) * cert.k * cert.k * nx));
  }
  add("eq_b_x", r8, slack, r8 <= slack);
  add("eq_b_x_truncated", r10, slack, r10 <= slack);
  add("eq_sum", r11, slack, r11 <= slack);

  const double chain_bound = 4.0 * cert.epsilon * static_cast<double>(cert.M) * cert.k * cert.k;
  const double beta = detail::quotient_bound(cert, a, v);
  add("beta_recomputed", std::abs(beta - cert.beta), tol, std::abs(beta - cert.beta) <= tol);
  add("beta_chain", beta, chain_bound * slack, beta <= chain_bound * slack);
  add("chain_half", chain_bound, 0.5, chain_bound <= 0.5 * slack);
  add("beta_half", beta, 0.5, beta <= 0.5);

  const Index fr = detail::family_rank(cert.spanning_family, n, cfg);
  add("span_rank", static_cast<double>(fr), static_cast<double>(a.dim()), fr == a.dim() && cert.family_rank == fr);
  return rep;
}

}  // namespace opdiag

#endif
