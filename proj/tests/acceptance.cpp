// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "opdiag/fixtures.hpp"
#include "opdiag/opdiag.hpp"

using namespace opdiag;

namespace {

const ToleranceConfig cfg{};
constexpr std::uint64_t kCorpusSeed = 20240601;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = what;
      pass = false;
    }
  }
};

std::vector<Index> sorted_desc(std::vector<Index> v) {
  std::sort(v.rbegin(), v.rend());
  return v;
}

char buf[512];

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// rank by column-pivoted QR, independent of the SVD rank used by the library
Index qr_rank(const std::vector<CMatrix>& family) {
  if (family.empty()) return 0;
  const Index n = family.front().rows();
  CMatrix m(n * n, static_cast<Index>(family.size()));
  for (std::size_t i = 0; i < family.size(); ++i) m.col(static_cast<Index>(i)) = vec(family[i]);
  Eigen::ColPivHouseholderQR<CMatrix> qr(m);
  qr.setThreshold(1e-9);
  return qr.rank();
}

const std::vector<fixtures::Fixture>& semisimple() {
  static const auto corpus = fixtures::semisimple_corpus(50, kCorpusSeed, cfg);
  return corpus;
}

Outcome c1() {
  Outcome o;
  double worst_t = 0.0, worst_r = 0.0;
  for (Index n = 2; n <= 5; ++n) {
    const auto t0 = Clock::now();
    const auto a = fixtures::full_matrix_algebra(n, cfg);
    const auto s = solve_diagonal(a, cfg);
    o.require(s.feasible(), fmt("M_%ld infeasible", static_cast<long>(n)));
    if (s.feasible()) {
      const auto rep = is_diagonal(a, *s.diagonal, cfg);
      worst_r = std::max({worst_r, rep.unit_residual, rep.commutation_residual});
      o.require(rep.unit_residual < 1e-8 && rep.commutation_residual < 1e-8, fmt("M_%ld residual", static_cast<long>(n)));
    }
    const auto can = is_diagonal(a, canonical_diagonal(n), cfg);
    o.require(can.verdict && can.unit_residual == 0.0 && can.commutation_residual < 1e-14,
              fmt("canonical u_%ld", static_cast<long>(n)));
    const double t = seconds_since(t0);
    worst_t = std::max(worst_t, t);
    o.require(t < 1.0, fmt("M_%ld took %.3f s", static_cast<long>(n), t));
  }
  if (o.pass) o.detail = fmt("n=2..5, worst residual %.2e, slowest %.3f s", worst_r, worst_t);
  return o;
}

Outcome c2() {
  Outcome o;
  struct Case {
    const char* name;
    MatrixAlgebra a;
  };
  const std::vector<Case> cases{{"T2", fixtures::upper_triangular(2, cfg)},
                                {"T3", fixtures::upper_triangular(3, cfg)},
                                {"J2", fixtures::jordan_commutant(2, cfg)}};
  std::string summary;
  for (const auto& c : cases) {
    const auto t0 = Clock::now();
    const auto s = solve_diagonal(c.a, cfg);
    const Index h = h1_dimension(c.a, kernel_bimodule(c.a, cfg).module, cfg);
    const double t = seconds_since(t0);
    o.require(!s.feasible(), std::string(c.name) + " reported feasible");
    o.require(s.residual > 0.1, fmt("%s residual %.3g", c.name, s.residual));
    o.require(h >= 1, fmt("%s h1 = %ld", c.name, static_cast<long>(h)));
    o.require(t < 1.0, fmt("%s took %.3f s", c.name, t));
    summary += fmt("%s: residual %.3f h1 %ld (%.3f s); ", c.name, s.residual, static_cast<long>(h), t);
  }
  if (o.pass) o.detail = summary.substr(0, summary.size() - 2);
  return o;
}

Outcome c3() {
  Outcome o;
  const auto& corpus = semisimple();
  const auto t0 = Clock::now();
  int exact = 0;
  double worst_split = 0.0;
  for (const auto& f : corpus) {
    try {
      const auto r = decompose(f.algebra, f.diagonal, cfg);
      const bool same = sorted_desc(r.block_sizes) == sorted_desc(f.block_sizes);
      exact += same ? 1 : 0;
      o.require(same, f.name + " block multiset differs");
      o.require(r.burnside_ok(), f.name + " Burnside check failed");
      for (double s : r.split_residuals) {
        worst_split = std::max(worst_split, s);
        o.require(s < 1e-8, fmt("%s split residual %.2e", f.name.c_str(), s));
      }
    } catch (const Error& e) {
      o.require(false, f.name + ": " + e.what());
    }
  }
  const double t = seconds_since(t0);
  o.require(t < 10.0, fmt("took %.2f s", t));
  if (o.pass) o.detail = fmt("%d/%zu exact, worst split residual %.2e, %.2f s", exact, corpus.size(), worst_split, t);
  return o;
}

Outcome c4() {
  Outcome o;
  auto rng = make_rng(cfg, 0x6334);
  double worst_w = 0.0;
  int derivations = 0;
  for (const auto& f : semisimple()) {
    const auto x = fixtures::random_bimodule(f.algebra, rng);
    const auto basis = derivation_space(f.algebra, x, cfg);
    // M_1 has only the zero derivation
    o.require(!basis.empty() || f.algebra.dim() == 1, f.name + " empty derivation space");
    for (int k = 0; k < 5; ++k) {
      Derivation delta{CMatrix::Zero(x.dim, f.algebra.dim())};
      for (const auto& d : basis) delta.D += complex_gaussian(rng) * d.D;
      if (!basis.empty()) delta.D /= delta.D.norm();
      const auto w = witness_from_diagonal(f.algebra, *f.diagonal, x, delta, cfg);
      worst_w = std::max(worst_w, w.residual);
      o.require(w.residual < 1e-8, fmt("%s witness residual %.2e", f.name.c_str(), w.residual));
      ++derivations;
    }
    const auto kb = kernel_bimodule(f.algebra, cfg);
    const auto inner = solve_inner(f.algebra, kb.module, canonical_derivation(f.algebra, kb), cfg);
    o.require(inner.inner(), f.name + " canonical derivation not inner");
    if (inner.inner()) {
      const TensorElement u = diagonal_from_witness(f.algebra, kb.to_tensor(f.algebra, *inner.x, cfg), cfg);
      o.require(is_diagonal(f.algebra, u, cfg).verdict, f.name + " 1(x)1 - w is not a diagonal");
    }
  }
  if (o.pass) o.detail = fmt("%d derivations, worst witness residual %.2e; 50/50 inner solves give diagonals", derivations, worst_w);
  return o;
}

TensorElement random_tensor(Index n, Index r, std::mt19937_64& rng) {
  TensorElement u(n);
  for (Index i = 0; i < r; ++i) u.add(random_matrix(n, n, rng), random_matrix(n, n, rng));
  return u;
}

double rel(double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-300); }

Outcome c5() {
  Outcome o;
  const auto t0 = Clock::now();
  for (Index n = 2; n <= 4; ++n) {
    const auto u = canonical_diagonal(n);
    const double lo = haagerup_lower(u, cfg), hi = haagerup_upper(u, cfg).upper;
    o.require(lo >= 1.0 - 1e-9 && hi <= 1.0 + 1e-6, fmt("u_%ld bracket [%.12f, %.12f]", static_cast<long>(n), lo, hi));
  }
  auto rng = make_rng(cfg, 0x6335);
  double gap = -1e300, order = -1e300, homog = 0.0, reparam = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto u = random_tensor(3, 2 + i % 3, rng);
    const double lo = haagerup_lower(u, cfg);
    const double hi = haagerup_upper(u, cfg).upper;
    const double pr = projective_upper(u, cfg).upper;
    gap = std::max(gap, lo - hi);
    order = std::max(order, hi - pr);
    o.require(lo <= hi + 1e-6, fmt("tensor %d: lower %.12g > upper %.12g", i, lo, hi));
    o.require(hi <= pr + 1e-9, fmt("tensor %d: haagerup %.12g > projective %.12g", i, hi, pr));

    const cplx lambda(std::uniform_real_distribution<double>(0.2, 3.0)(rng), std::uniform_real_distribution<double>(-2.0, 2.0)(rng));
    const auto v = u.scaled(lambda);
    const double s = std::abs(lambda);
    const double h1 = rel(haagerup_lower(v, cfg), s * lo), h2 = rel(haagerup_upper(v, cfg).upper, s * hi),
                 h3 = rel(projective_upper(v, cfg).upper, s * pr);
    homog = std::max({homog, h1, h2, h3});
    o.require(h1 <= 1e-9 && h2 <= 1e-9 && h3 <= 1e-9, fmt("tensor %d homogeneity %.2e %.2e %.2e", i, h1, h2, h3));

    const Index r = static_cast<Index>(u.size());
    const CMatrix g = identity(r) + 0.5 * random_matrix(r, r, rng) / std::sqrt(static_cast<double>(r));
    const auto w = reparametrize(u, g);
    const double r1 = rel(haagerup_upper(w, cfg).upper, hi);
    const double r2 = rel(projective_upper(w, cfg).upper, pr);
    reparam = std::max({reparam, r1, r2});
    o.require(r1 <= 1e-6 && r2 <= 1e-6, fmt("tensor %d reparametrization %.2e %.2e", i, r1, r2));
  }
  const double t = seconds_since(t0);
  o.require(t < 60.0, fmt("took %.1f s", t));
  if (o.pass)
    o.detail = fmt("max(lower-upper) %.1e, max(h-proj) %.1e, homogeneity %.1e, reparametrization %.1e, %.1f s", gap, order,
                   homog, reparam, t);
  return o;
}

Outcome c6() {
  Outcome o;
  double worst_beta = 0.0, worst_c = 0.0;
  int injected = 0, rejected = 0;
  for (const auto& f : semisimple()) {
    SpanningCertificate cert;
    try {
      cert = build_certificate(f.algebra, *f.diagonal, cfg);
    } catch (const Error& e) {
      o.require(false, f.name + ": " + e.what());
      continue;
    }
    const double cn = op_norm(cert.c);
    worst_beta = std::max(worst_beta, cert.beta);
    worst_c = std::max(worst_c, cn);
    o.require(cert.beta <= 0.5, fmt("%s beta %.3g", f.name.c_str(), cert.beta));
    o.require(cn < 2.0, fmt("%s ||c|| %.3g", f.name.c_str(), cn));
    o.require(cert.epsilon == 1.0 / (8.0 * static_cast<double>(cert.M) * cert.k * cert.k), f.name + " epsilon formula");
    o.require(cert.family_rank == f.algebra.dim() && qr_rank(cert.spanning_family) == f.algebra.dim(), f.name + " family rank");
    o.require(verify_certificate(f.algebra, *f.diagonal, cert, cfg).ok(), f.name + " honest certificate rejected");

    std::vector<std::function<void(SpanningCertificate&)>> faults{
        [](SpanningCertificate& c) { c.c *= 3.0; },
        [](SpanningCertificate& c) { c.functionals[0].frame.setZero(); },
        [](SpanningCertificate& c) { c.epsilon *= 2.0; },
        [](SpanningCertificate& c) { c.k *= 0.5; },
        [](SpanningCertificate& c) { c.spanning_family.back() = CMatrix::Zero(c.c.rows(), c.c.cols()); },
        [](SpanningCertificate& c) { c.beta += 1e-3; },
        [](SpanningCertificate& c) { c.M = c.M + 1; },
    };
    for (const auto& fault : faults) {
      SpanningCertificate bad = cert;
      fault(bad);
      ++injected;
      if (!verify_certificate(f.algebra, *f.diagonal, bad, cfg).ok()) ++rejected;
    }
  }
  o.require(rejected == injected, fmt("%d of %d injected faults accepted", injected - rejected, injected));
  if (o.pass)
    o.detail = fmt("50/50 certificates, worst beta %.2e, worst ||c|| %.3f, %d/%d faults rejected", worst_beta, worst_c, rejected,
                   injected);
  return o;
}

Outcome c7() {
  Outcome o;
  auto rng = make_rng(cfg, 0x6337);
  std::vector<fixtures::Fixture> all = semisimple();
  for (auto& f : fixtures::nonsemisimple_corpus(kCorpusSeed, cfg)) all.push_back(std::move(f));
  int agree = 0;
  for (const auto& f : all) {
    const bool has_diag = solve_diagonal(f.algebra, cfg).feasible();
    bool splits = false;
    try {
      splits = decompose(f.algebra, std::nullopt, cfg).burnside_ok();
    } catch (const Error&) {
      splits = false;
    }
    bool vanishes = h1_dimension(f.algebra, kernel_bimodule(f.algebra, cfg).module, cfg) == 0;
    for (int k = 0; k < 10 && vanishes; ++k) vanishes = h1_dimension(f.algebra, fixtures::random_bimodule(f.algebra, rng), cfg) == 0;
    const bool ok = has_diag == splits && splits == vanishes && vanishes == f.semisimple;
    agree += ok ? 1 : 0;
    o.require(ok, fmt("%s: diagonal %d, decompose %d, h1 %d, expected %d", f.name.c_str(), has_diag, splits, vanishes, f.semisimple));
  }
  if (o.pass || agree > 0) {
    const std::string head = fmt("%d/%zu algebras agree", agree, all.size());
    o.detail = o.pass ? head : head + "; first mismatch " + o.detail;
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"C1 matrix-algebra diagonals", c1},   {"C2 non-semisimple rejection", c2}, {"C3 Wedderburn round-trip", c3},
      {"C4 witness formula", c4},           {"C5 Haagerup norm pinch", c5},      {"C6 certificate chain", c6},
      {"C7 equivalence sweep", c7},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s  %-30s %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
