#ifndef OPDIAG_CONFIG_HPP
#define OPDIAG_CONFIG_HPP

#include <cstdint>
#include <random>

#include "opdiag/errors.hpp"

namespace opdiag {

struct OptimizerConfig {
  int max_iterations = 500;
  int restarts = 8;
  /// Relative tolerance on the reported norm brackets.
  double bisection_tol = 1e-6;
};

/// Numerical policy shared by every operation. Rank decisions compare
/// singular values against rank_tol times the problem scale; pass/fail
/// checks compare residuals against verify_tol.
struct ToleranceConfig {
  double rank_tol = 1e-10;
  double verify_tol = 1e-8;
  OptimizerConfig opt{};
  std::uint64_t seed = 20001;

  void validate() const {
    if (!(rank_tol > 0) || !(verify_tol > 0) || !(opt.bisection_tol > 0))
      throw Error(Errc::InvalidConfig, "tolerances must be strictly positive");
    if (opt.max_iterations <= 0 || opt.restarts < 0)
      throw Error(Errc::InvalidConfig, "optimizer limits must be positive");
  }
};

/// Deterministic generator for a named call site: the same config seed and
/// stream id always produce the same sequence.
inline std::mt19937_64 make_rng(const ToleranceConfig& cfg, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace opdiag

#endif
