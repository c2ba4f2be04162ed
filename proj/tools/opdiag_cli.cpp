#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "opdiag/io.hpp"
#include "opdiag/opdiag.hpp"

namespace {

using opdiag::io::json;

enum Exit { kOk = 0, kInput = 1, kInfeasible = 2, kInternal = 3 };

struct Options {
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  bool json_out = false;
  bool timing = false;
  std::string out;
  std::string which = "h";
  bool fuzz = false;
  int permutations = 0;
  std::string input;
  std::string bimodule;
};

std::string sha256(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return ss.str();
}

class Run {
 public:
  Run(std::string command, const Options& opt) : command_(std::move(command)), opt_(opt) {}

  opdiag::ToleranceConfig config() const {
    opdiag::ToleranceConfig cfg;
    if (const char* path = std::getenv("OPDIAG_CONFIG"); path && *path)
      cfg = opdiag::io::config_from_json(opdiag::io::read_json(path));
    if (opt_.tol) cfg.verify_tol = *opt_.tol;
    if (opt_.seed) cfg.seed = *opt_.seed;
    cfg.validate();
    return cfg;
  }

  json load(const std::string& path) {
    const std::string text = opdiag::io::read_text(path);
    inputs_.push_back({{"path", path}, {"sha256", sha256(text)}});
    return opdiag::io::parse(text, path);
  }

  void residual(const std::string& name, double v) { residuals_[name] = v; }
  void line(const std::string& s) { lines_.push_back(s); }

  int finish(int code, json outcome, const std::string& error, const std::optional<opdiag::ToleranceConfig>& cfg) {
    json rep;
    rep["command"] = command_;
    rep["inputs"] = inputs_;
    rep["exit_code"] = code;
    if (code == kOk) rep["outcome"] = std::move(outcome);
    rep["residuals"] = residuals_;
    if (cfg) rep["config"] = opdiag::io::to_json(*cfg);
    if (!error.empty()) rep["error"] = error;
    if (opt_.timing)
      rep["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (opt_.json_out) {
      std::cout << rep.dump(2) << "\n";
    } else {
      for (const auto& l : lines_) std::cout << l << "\n";
      if (!error.empty()) std::cerr << "error: " << error << "\n";
      if (opt_.timing) std::cout << "wall_time " << rep["wall_time"].get<double>() << " s\n";
    }
    return code;
  }

 private:
  std::string command_;
  const Options& opt_;
  json inputs_ = json::array();
  json residuals_ = json::object();
  std::vector<std::string> lines_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int exit_for(opdiag::Errc e) {
  using opdiag::Errc;
  switch (e) {
    case Errc::BoundViolated:
    case Errc::WitnessSolveFailed:
    case Errc::CommutationCheckFailed:
    case Errc::NoNonScalarCommutant:
    case Errc::RecursionDepthExceeded:
    case Errc::DichotomyViolation:
      return kInternal;
    default:
      return kInput;
  }
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(12) << v;
  return ss.str();
}

template <class Body>
int guarded(const std::string& name, const Options& opt, Body body) {
  Run run(name, opt);
  std::optional<opdiag::ToleranceConfig> cfg;
  try {
    cfg = run.config();
    return body(run, *cfg);
  } catch (const opdiag::Error& e) {
    return run.finish(exit_for(e.code()), {}, e.what(), cfg);
  } catch (const std::exception& e) {
    return run.finish(kInput, {}, e.what(), cfg);
  }
}

int cmd_diagonal(const Options& opt) {
  return guarded("diagonal", opt, [&](Run& run, const opdiag::ToleranceConfig& cfg) {
    const auto a = opdiag::io::algebra_from_json(run.load(opt.input), cfg);
    const auto sd = opdiag::solve_diagonal(a, cfg);
    run.residual("least_squares", sd.residual);
    run.line("algebra dimension " + std::to_string(a.dim()) + " in M_" + std::to_string(a.ambient_dim()));
    if (!sd.feasible()) {
      run.line("no diagonal: residual " + fmt(sd.residual));
      return run.finish(kInfeasible, {}, "", cfg);
    }
    const auto rep = opdiag::is_diagonal(a, *sd.diagonal, cfg);
    run.residual("unit", rep.unit_residual);
    run.residual("commutation", rep.commutation_residual);
    json outcome = {{"terms", sd.diagonal->size()}, {"is_diagonal", rep.verdict}, {"solution_norm", sd.solution_norm}};
    if (!opt.out.empty()) {
      opdiag::io::write_json(opt.out, opdiag::io::to_json(*sd.diagonal));
      outcome["tensor_file"] = opt.out;
    } else {
      outcome["tensor"] = opdiag::io::to_json(*sd.diagonal);
    }
    run.line("diagonal with " + std::to_string(sd.diagonal->size()) + " terms, residual " + fmt(sd.residual));
    run.line(std::string("is_diagonal ") + (rep.verdict ? "true" : "false") + " (unit " + fmt(rep.unit_residual) +
             ", commutation " + fmt(rep.commutation_residual) + ")");
    if (!opt.out.empty()) run.line("written to " + opt.out);
    return run.finish(kOk, outcome, "", cfg);
  });
}

std::string join(const std::vector<opdiag::Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

int cmd_decompose(const Options& opt) {
  return guarded("decompose", opt, [&](Run& run, const opdiag::ToleranceConfig& cfg) {
    const auto a = opdiag::io::algebra_from_json(run.load(opt.input), cfg);
    const auto sd = opdiag::solve_diagonal(a, cfg);
    run.residual("least_squares", sd.residual);
    if (!sd.feasible()) {
      run.line("no diagonal (residual " + fmt(sd.residual) + "): not a direct sum of matrix algebras");
      return run.finish(kInfeasible, {}, "", cfg);
    }
    const auto r = opdiag::decompose(a, sd.diagonal, cfg);
    double split = 0.0, witness = 0.0;
    for (double v : r.split_residuals) split = std::max(split, v);
    for (double v : r.witness_residuals) witness = std::max(witness, v);
    run.residual("split", split);
    run.residual("witness", witness);
    run.residual("off_block", r.off_block_residual);
    json blocks = json::array();
    for (std::size_t i = 0; i < r.block_sizes.size(); ++i)
      blocks.push_back({{"size", r.block_sizes[i]}, {"image_dim", r.block_dims[i]}});
    json outcome = {{"block_sizes", r.block_sizes},
                    {"signature", r.signature},
                    {"blocks", blocks},
                    {"burnside_ok", r.burnside_ok()},
                    {"conjugator_condition", r.conjugator_condition},
                    {"split_residuals", r.split_residuals},
                    {"witness_residuals", r.witness_residuals},
                    {"depth", r.depth}};
    run.line("block sizes " + join(r.block_sizes));
    run.line("signature " + join(r.signature));
    run.line("conjugator condition " + fmt(r.conjugator_condition) + ", off-block residual " + fmt(r.off_block_residual));
    run.line(std::string("burnside ") + (r.burnside_ok() ? "ok" : "FAILED"));
    return run.finish(kOk, outcome, "", cfg);
  });
}

int cmd_h1(const Options& opt) {
  return guarded("h1", opt, [&](Run& run, const opdiag::ToleranceConfig& cfg) {
    const json adoc = run.load(opt.input);
    const auto a = opdiag::io::algebra_from_json(adoc, cfg);
    opdiag::Bimodule x;
    std::string which = "kernel";
    if (opt.bimodule.empty()) {
      x = opdiag::kernel_bimodule(a, cfg).module;
    } else {
      x = opdiag::io::bimodule_from_json(run.load(opt.bimodule), adoc, a, cfg);
      which = "file";
    }
    const auto chk = opdiag::check_bimodule(a, x, cfg);
    run.residual("bimodule_axioms", chk.worst());
    if (chk.worst() > cfg.verify_tol)
      throw opdiag::Error(opdiag::Errc::BimoduleAxiomViolation, "axiom residual " + fmt(chk.worst()));
    const opdiag::Index h = opdiag::h1_dimension(a, x, cfg);
    run.line("h1 " + std::to_string(h) + " (" + which + " bimodule of dimension " + std::to_string(x.dim) + ")");
    return run.finish(kOk, json{{"h1", h}, {"bimodule", which}, {"bimodule_dim", x.dim}}, "", cfg);
  });
}

json restarts_json(const opdiag::NormEstimate& e) {
  json j = {{"count", e.restarts}, {"values", e.restart_values}};
  if (!e.restart_values.empty()) {
    j["best"] = *std::min_element(e.restart_values.begin(), e.restart_values.end());
    j["worst"] = *std::max_element(e.restart_values.begin(), e.restart_values.end());
  }
  return j;
}

int cmd_norm(const Options& opt) {
  return guarded("norm", opt, [&](Run& run, const opdiag::ToleranceConfig& cfg) {
    const auto u = opdiag::io::tensor_from_json(run.load(opt.input));
    json outcome;
    if (opt.which == "h") {
      const auto e = opdiag::haagerup_upper(u, cfg);
      run.residual("rep_eval_gap", std::abs(opdiag::haagerup_eval(e.achieving_rep) - e.upper));
      outcome = {{"which", "h"},        {"lower", e.lower},       {"upper", e.upper},
                 {"converged", e.converged}, {"iterations", e.iterations}, {"restarts", restarts_json(e)}};
      run.line("haagerup norm in [" + fmt(e.lower) + ", " + fmt(e.upper) + "]" + (e.converged ? "" : " (not converged)"));
    } else {
      const auto e = opdiag::projective_upper(u, cfg);
      run.residual("rep_eval_gap", std::abs(opdiag::projective_eval(e.achieving_rep) - e.upper));
      outcome = {{"which", "proj"}, {"upper", e.upper}, {"converged", e.converged},
                 {"iterations", e.iterations}, {"restarts", restarts_json(e)}};
      run.line("projective norm <= " + fmt(e.upper) + (e.converged ? "" : " (not converged)"));
    }
    return run.finish(kOk, outcome, "", cfg);
  });
}

json checks_json(const opdiag::CertificateReport& rep) {
  json j = json::array();
  for (const auto& c : rep.checks) j.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}});
  return j;
}

int cmd_certify(const Options& opt) {
  return guarded("certify", opt, [&](Run& run, const opdiag::ToleranceConfig& cfg) {
    const auto a = opdiag::io::algebra_from_json(run.load(opt.input), cfg);
    const auto sd = opdiag::solve_diagonal(a, cfg);
    run.residual("least_squares", sd.residual);
    if (!sd.feasible()) {
      run.line("no diagonal: residual " + fmt(sd.residual));
      return run.finish(kInfeasible, {}, "", cfg);
    }
    const auto cert = opdiag::build_certificate(a, *sd.diagonal, cfg, {opt.fuzz, opt.permutations});
    const auto rep = opdiag::verify_certificate(a, *sd.diagonal, cert, cfg);
    run.residual("beta", cert.beta);
    run.residual("proximity", cert.proximity);
    if (!rep.ok()) throw opdiag::Error(opdiag::Errc::BoundViolated, "fresh certificate fails verification");
    json doc = {{"algebra", opdiag::io::to_json(a)},
                {"diagonal", opdiag::io::to_json(*sd.diagonal)},
                {"certificate", opdiag::io::to_json(cert)}};
    json outcome = {{"M", cert.M},       {"N", cert.N},       {"k", cert.k},
                    {"epsilon", cert.epsilon}, {"beta", cert.beta}, {"c_norm", opdiag::op_norm(cert.c)},
                    {"family_rank", cert.family_rank}, {"algebra_dim", a.dim()}, {"fuzz", opt.fuzz},
                    {"checks", checks_json(rep)}};
    if (cert.min_M_over_permutations) outcome["min_M_over_permutations"] = *cert.min_M_over_permutations;
    if (!opt.out.empty()) {
      opdiag::io::write_json(opt.out, doc);
      outcome["certificate_file"] = opt.out;
    }
    run.line("M " + std::to_string(cert.M) + ", N " + std::to_string(cert.N) + ", k " + fmt(cert.k) + ", epsilon " +
             fmt(cert.epsilon));
    run.line("beta " + fmt(cert.beta) + " <= 1/2, ||c|| " + fmt(opdiag::op_norm(cert.c)) + ", span rank " +
             std::to_string(cert.family_rank) + " = dim " + std::to_string(a.dim()));
    if (!opt.out.empty()) run.line("written to " + opt.out);
    return run.finish(kOk, outcome, "", cfg);
  });
}

int cmd_verify(const Options& opt) {
  return guarded("verify", opt, [&](Run& run, const opdiag::ToleranceConfig& cfg) {
    const json doc = run.load(opt.input);
    const auto a = opdiag::io::algebra_from_json(opdiag::io::detail::field(doc, "algebra"), cfg);
    const auto u = opdiag::io::tensor_from_json(opdiag::io::detail::field(doc, "diagonal"));
    const auto cert = opdiag::io::certificate_from_json(opdiag::io::detail::field(doc, "certificate"));
    const auto rep = opdiag::verify_certificate(a, u, cert, cfg);
    for (const auto& c : rep.checks)
      run.line(std::string(c.pass ? "pass " : "FAIL ") + c.name + " " + fmt(c.value) + " (bound " + fmt(c.bound) + ")");
    if (!rep.ok()) {
      for (const auto& c : rep.checks)
        if (!c.pass) run.residual(c.name, c.value);
      return run.finish(kInput, {}, "certificate rejected", cfg);
    }
    return run.finish(kOk, json{{"checks", checks_json(rep)}}, "", cfg);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diagonals, Wedderburn splitting, Hochschild H^1 and tensor norms for matrix algebras"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--tol", opt.tol, "verification tolerance")->check(CLI::PositiveNumber);
  app.add_option("--seed", opt.seed, "random seed");
  app.add_flag("--json", opt.json_out, "machine-readable report on stdout");
  app.add_flag("--timing", opt.timing, "include wall time in the report");

  auto* diag = app.add_subcommand("diagonal", "solve for a diagonal of an algebra");
  diag->add_option("algebra", opt.input, "algebra file")->required();
  diag->add_option("--out", opt.out, "write the diagonal to this tensor file");

  auto* dec = app.add_subcommand("decompose", "Wedderburn block decomposition");
  dec->add_option("algebra", opt.input, "algebra file")->required();

  auto* h1 = app.add_subcommand("h1", "dimension of H^1 against a bimodule");
  h1->add_option("algebra", opt.input, "algebra file")->required();
  h1->add_option("bimodule", opt.bimodule, "bimodule file (default: kernel of multiplication)");

  auto* norm = app.add_subcommand("norm", "Haagerup bracket or projective upper bound of a tensor");
  norm->add_option("tensor", opt.input, "tensor file")->required();
  norm->add_option("--which", opt.which, "h or proj")->check(CLI::IsMember({"h", "proj"}));

  auto* cert = app.add_subcommand("certify", "finite spanning certificate from a diagonal");
  cert->add_option("algebra", opt.input, "algebra file")->required();
  cert->add_option("--out", opt.out, "write the certificate to this file");
  cert->add_flag("--fuzz", opt.fuzz, "perturb the functionals within half the proximity budget");
  cert->add_option("--permutations", opt.permutations, "random term orders tried for the smallest cutoff")
      ->check(CLI::NonNegativeNumber);

  auto* ver = app.add_subcommand("verify", "re-check a certificate file");
  ver->add_option("certificate", opt.input, "certificate file")->required();

  for (auto* sub : {diag, dec, h1, norm, cert, ver}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  if (diag->parsed()) return cmd_diagonal(opt);
  if (dec->parsed()) return cmd_decompose(opt);
  if (h1->parsed()) return cmd_h1(opt);
  if (norm->parsed()) return cmd_norm(opt);
  if (cert->parsed()) return cmd_certify(opt);
  return cmd_verify(opt);
}
