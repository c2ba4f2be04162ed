#ifndef OPDIAG_IO_HPP
#define OPDIAG_IO_HPP

// JSON documents for algebras, tensors, bimodules, configs and certificates.
// Complex entries are written as [re, im]; matrices as lists of rows.

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "opdiag/certify.hpp"
#include "opdiag/cohomology.hpp"

namespace opdiag::io {

using json = nlohmann::json;

namespace detail {

[[noreturn]] inline void fail(const std::string& what) { throw Error(Errc::Parse, what); }

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline double number(const json& j, const char* what) {
  if (!j.is_number()) fail(std::string(what) + " must be a number");
  return j.get<double>();
}

inline Index count(const json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(std::string(what) + " must be a non-negative integer");
  return static_cast<Index>(j.get<long long>());
}

}  // namespace detail

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    detail::fail("complex entry must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const CMatrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMatrix matrix_from_json(const json& j) {
  if (!j.is_array()) detail::fail("matrix must be a list of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows == 0 ? 0 : static_cast<Index>(j[0].is_array() ? j[0].size() : 0);
  CMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) detail::fail("matrix rows have unequal lengths");
    for (Index k = 0; k < cols; ++k) m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)]);
  }
  return m;
}

inline CMatrix square_from_json(const json& j, Index n, const char* what) {
  CMatrix m = matrix_from_json(j);
  if (m.rows() != m.cols()) throw Error(Errc::NonSquareInput, std::string(what) + " is not square");
  if (n >= 0 && m.rows() != n) throw Error(Errc::DimensionMismatch, std::string(what) + " has the wrong size");
  return m;
}

// ---- config

inline json to_json(const ToleranceConfig& c) {
  return {{"rank_tol", c.rank_tol},
          {"verify_tol", c.verify_tol},
          {"seed", c.seed},
          {"opt", {{"max_iterations", c.opt.max_iterations}, {"restarts", c.opt.restarts}, {"bisection_tol", c.opt.bisection_tol}}}};
}

/// Fields absent from the document keep the values of `base`.
inline ToleranceConfig config_from_json(const json& j, ToleranceConfig base = {}) {
  if (!j.is_object()) detail::fail("config must be an object");
  if (j.contains("rank_tol")) base.rank_tol = detail::number(j["rank_tol"], "rank_tol");
  if (j.contains("verify_tol")) base.verify_tol = detail::number(j["verify_tol"], "verify_tol");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) detail::fail("seed must be a non-negative integer");
    base.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("opt")) {
    const json& o = j["opt"];
    if (o.contains("max_iterations")) base.opt.max_iterations = static_cast<int>(detail::count(o["max_iterations"], "max_iterations"));
    if (o.contains("restarts")) base.opt.restarts = static_cast<int>(detail::count(o["restarts"], "restarts"));
    if (o.contains("bisection_tol")) base.opt.bisection_tol = detail::number(o["bisection_tol"], "bisection_tol");
  }
  base.validate();
  return base;
}

// ---- algebras

/// Written with the orthonormal basis as generators.
inline json to_json(const MatrixAlgebra& a) {
  json gens = json::array();
  for (const auto& e : a.basis()) gens.push_back(to_json(e));
  return {{"ambient_dim", a.ambient_dim()}, {"generators", gens}};
}

inline json to_json(const StructureConstants& sc) {
  json table = json::array();
  for (Index i = 0; i < sc.dim; ++i) {
    json row = json::array();
    for (Index j = 0; j < sc.dim; ++j) {
      json prod = json::array();
      for (Index k = 0; k < sc.dim; ++k) prod.push_back(to_json(sc(i, j, k)));
      row.push_back(std::move(prod));
    }
    table.push_back(std::move(row));
  }
  return {{"dim", sc.dim}, {"table", table}, {"unit_index", sc.unit_index}};
}

/// table[i][j] lists the coordinates of e_i e_j.
inline StructureConstants structure_constants_from_json(const json& j) {
  StructureConstants sc;
  sc.dim = detail::count(detail::field(j, "dim"), "dim");
  sc.unit_index = detail::count(detail::field(j, "unit_index"), "unit_index");
  if (sc.dim == 0 || sc.unit_index >= sc.dim) detail::fail("unit_index out of range");
  const json& t = detail::field(j, "table");
  const auto d = static_cast<std::size_t>(sc.dim);
  if (!t.is_array() || t.size() != d) detail::fail("table must be dim x dim x dim");
  sc.table.assign(d * d * d, cplx(0));
  for (std::size_t i = 0; i < d; ++i) {
    if (!t[i].is_array() || t[i].size() != d) detail::fail("table must be dim x dim x dim");
    for (std::size_t k = 0; k < d; ++k) {
      const json& prod = t[i][k];
      if (!prod.is_array() || prod.size() != d) detail::fail("table must be dim x dim x dim");
      for (std::size_t l = 0; l < d; ++l)
        sc(static_cast<Index>(i), static_cast<Index>(k), static_cast<Index>(l)) = complex_from_json(prod[l]);
    }
  }
  return sc;
}

/// Generators are closed under products and the identity is adjoined; a
/// structure-constant block is realised by its left regular representation.
inline MatrixAlgebra algebra_from_json(const json& j, const ToleranceConfig& cfg) {
  if (!j.is_object()) detail::fail("algebra document must be an object");
  const bool g = j.contains("generators"), s = j.contains("structure_constants");
  if (g == s) detail::fail("exactly one of 'generators' and 'structure_constants' is required");
  if (s) {
    const StructureConstants sc = structure_constants_from_json(j["structure_constants"]);
    if (j.contains("ambient_dim") && detail::count(j["ambient_dim"], "ambient_dim") != sc.dim)
      throw Error(Errc::DimensionMismatch, "ambient_dim differs from the structure-constant dimension");
    return left_regular_representation(sc, cfg);
  }
  const Index n = detail::count(detail::field(j, "ambient_dim"), "ambient_dim");
  if (n == 0) detail::fail("ambient_dim must be positive");
  const json& gens = j["generators"];
  if (!gens.is_array()) detail::fail("generators must be a list of matrices");
  std::vector<CMatrix> mats;
  for (const auto& m : gens) mats.push_back(square_from_json(m, n, "generator"));
  return generate_algebra(n, mats, cfg);
}

// ---- tensors

inline json to_json(const TensorElement& u) {
  json terms = json::array();
  for (const auto& t : u.terms) terms.push_back({{"a", to_json(t.a)}, {"b", to_json(t.b)}});
  return terms;
}

/// A list of {a, b} terms, or {"ambient_dim": n, "terms": [...]}.
inline TensorElement tensor_from_json(const json& j) {
  Index n = -1;
  const json* terms = &j;
  if (j.is_object()) {
    if (j.contains("ambient_dim")) n = detail::count(j["ambient_dim"], "ambient_dim");
    terms = &detail::field(j, "terms");
  }
  if (!terms->is_array()) detail::fail("tensor must be a list of terms");
  std::vector<std::pair<CMatrix, CMatrix>> parsed;
  for (const auto& t : *terms) {
    CMatrix a = square_from_json(detail::field(t, "a"), n, "tensor factor");
    if (n < 0) n = a.rows();
    CMatrix b = square_from_json(detail::field(t, "b"), n, "tensor factor");
    parsed.emplace_back(std::move(a), std::move(b));
  }
  if (n < 0) detail::fail("empty tensor needs ambient_dim");
  TensorElement u(n);
  for (auto& [a, b] : parsed) u.add(std::move(a), std::move(b));
  return u;
}

// ---- bimodules

/// Pairs with the algebra document written by to_json(a).
inline json to_json(const Bimodule& x) {
  json l = json::array(), r = json::array();
  for (const auto& m : x.left) l.push_back(to_json(m));
  for (const auto& m : x.right) r.push_back(to_json(m));
  return {{"dim", x.dim}, {"left_action", l}, {"right_action", r}};
}

/// The matrices an algebra document lists: its generators, or the left
/// regular images of its abstract basis.
inline std::vector<CMatrix> listed_elements(const json& algebra_doc) {
  std::vector<CMatrix> out;
  if (algebra_doc.contains("structure_constants"))
    return regular_matrices(structure_constants_from_json(algebra_doc["structure_constants"]));
  const Index n = detail::count(detail::field(algebra_doc, "ambient_dim"), "ambient_dim");
  for (const auto& m : detail::field(algebra_doc, "generators")) out.push_back(square_from_json(m, n, "generator"));
  return out;
}

/// Actions are listed parallel to the matrices of the companion algebra
/// document and extended to the whole algebra along products of those
/// matrices, with the identity acting trivially.
inline Bimodule bimodule_from_json(const json& j, const json& algebra_doc, const MatrixAlgebra& a, const ToleranceConfig& cfg) {
  const std::vector<CMatrix> listed = listed_elements(algebra_doc);
  Bimodule in;
  in.dim = detail::count(detail::field(j, "dim"), "dim");
  for (const char* key : {"left_action", "right_action"}) {
    const json& list = detail::field(j, key);
    if (!list.is_array()) detail::fail(std::string(key) + " must be a list of matrices");
    auto& side = std::string(key) == "left_action" ? in.left : in.right;
    for (const auto& m : list) side.push_back(square_from_json(m, in.dim, "action"));
    if (side.size() != listed.size())
      throw Error(Errc::DimensionMismatch, std::string(key) + " must have one matrix per listed algebra element");
  }
  const Index n = a.ambient_dim();
  for (const auto& g : listed)
    if (!membership(a, g, cfg).member()) throw Error(Errc::FactorNotInAlgebra, "listed element outside the algebra");

  struct Word {
    CMatrix m, l, r;
  };
  std::vector<Word> words{{identity(n), identity(in.dim), identity(in.dim)}};
  CMatrix q = vec(identity(n)) / std::sqrt(static_cast<double>(n));
  const double tol = cfg.rank_tol * 100.0;
  for (std::size_t w = 0; w < words.size() && static_cast<Index>(words.size()) < a.dim(); ++w)
    for (std::size_t g = 0; g < listed.size() && static_cast<Index>(words.size()) < a.dim(); ++g) {
      const CMatrix m = words[w].m * listed[g];
      const CVector v = vec(m);
      const CVector rest = v - q * (q.adjoint() * v);
      if (rest.norm() <= tol * std::max(1.0, v.norm())) continue;
      q.conservativeResize(Eigen::NoChange, q.cols() + 1);
      q.col(q.cols() - 1) = rest / rest.norm();
      words.push_back({m, words[w].l * in.left[g], in.right[g] * words[w].r});
    }
  if (static_cast<Index>(words.size()) != a.dim())
    throw Error(Errc::DimensionMismatch, "listed elements do not generate the algebra");

  CMatrix frame(n * n, a.dim());
  for (std::size_t i = 0; i < words.size(); ++i) frame.col(static_cast<Index>(i)) = vec(words[i].m);
  const Eigen::PartialPivLU<CMatrix> lu(a.frame().adjoint() * frame);
  const CMatrix coeff = lu.solve(identity(a.dim()));  // e_k = sum_i coeff(i, k) word_i
  Bimodule x;
  x.dim = in.dim;
  auto extend = [&](const CVector& c) {
    CMatrix l = CMatrix::Zero(in.dim, in.dim), r = l;
    for (std::size_t i = 0; i < words.size(); ++i) {
      l += c(static_cast<Index>(i)) * words[i].l;
      r += c(static_cast<Index>(i)) * words[i].r;
    }
    return std::pair{l, r};
  };
  for (Index k = 0; k < a.dim(); ++k) {
    auto [l, r] = extend(coeff.col(k));
    x.left.push_back(std::move(l));
    x.right.push_back(std::move(r));
  }
  // the extension must reproduce every listed action
  double miss = 0.0;
  for (std::size_t g = 0; g < listed.size(); ++g) {
    const CVector c = a.coords(listed[g]);
    miss = std::max({miss, (x.left_of(c) - in.left[g]).norm() / std::max(1.0, in.left[g].norm()),
                     (x.right_of(c) - in.right[g]).norm() / std::max(1.0, in.right[g].norm())});
  }
  if (miss > cfg.verify_tol)
    throw Error(Errc::BimoduleAxiomViolation, "listed actions are not multiplicative, residual " + std::to_string(miss));
  return x;
}

// ---- certificates

inline json to_json(const SpanningCertificate& c) {
  json f = json::array(), fam = json::array();
  for (const auto& x : c.functionals) f.push_back(to_json(x.frame));
  for (const auto& m : c.spanning_family) fam.push_back(to_json(m));
  json j = {{"M", c.M},          {"c", to_json(c.c)}, {"k", c.k},
            {"epsilon", c.epsilon}, {"functionals", f}, {"N", c.N},
            {"spanning_family", fam}, {"beta", c.beta}, {"family_rank", c.family_rank},
            {"proximity", c.proximity}};
  if (c.min_M_over_permutations) j["min_M_over_permutations"] = *c.min_M_over_permutations;
  return j;
}

inline SpanningCertificate certificate_from_json(const json& j) {
  SpanningCertificate c;
  c.M = detail::count(detail::field(j, "M"), "M");
  c.c = matrix_from_json(detail::field(j, "c"));
  c.k = detail::number(detail::field(j, "k"), "k");
  c.epsilon = detail::number(detail::field(j, "epsilon"), "epsilon");
  for (const auto& f : detail::field(j, "functionals")) c.functionals.push_back({matrix_from_json(f)});
  c.N = detail::count(detail::field(j, "N"), "N");
  for (const auto& m : detail::field(j, "spanning_family")) c.spanning_family.push_back(matrix_from_json(m));
  c.beta = detail::number(detail::field(j, "beta"), "beta");
  c.family_rank = detail::count(detail::field(j, "family_rank"), "family_rank");
  if (j.contains("proximity")) c.proximity = detail::number(j["proximity"], "proximity");
  if (j.contains("min_M_over_permutations")) c.min_M_over_permutations = detail::count(j["min_M_over_permutations"], "min_M");
  return c;
}

// ---- files

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Parse, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::Parse, origin + ": " + e.what());
  }
}

inline json read_json(const std::string& path) { return parse(read_text(path), path); }

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Parse, "cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace opdiag::io

#endif
