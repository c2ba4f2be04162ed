#ifndef OPDIAG_ERRORS_HPP
#define OPDIAG_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace opdiag {

/// Failure categories raised by the library. Mathematically meaningful
/// negative answers (no diagonal, not inner, not a member) are returned as
/// values, not thrown.
enum class Errc {
  NonSquareInput,
  DimensionMismatch,
  NotUnital,
  AssociativityViolation,
  FactorNotInAlgebra,
  WitnessNotInKernel,
  BimoduleAxiomViolation,
  DiagonalInvalid,
  WitnessSolveFailed,
  CommutationCheckFailed,
  NoNonScalarCommutant,
  RecursionDepthExceeded,
  DichotomyViolation,
  BoundViolated,
  InvalidConfig,
  Parse,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::NonSquareInput: return "NonSquareInput";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotUnital: return "NotUnital";
    case Errc::AssociativityViolation: return "AssociativityViolation";
    case Errc::FactorNotInAlgebra: return "FactorNotInAlgebra";
    case Errc::WitnessNotInKernel: return "WitnessNotInKernel";
    case Errc::BimoduleAxiomViolation: return "BimoduleAxiomViolation";
    case Errc::DiagonalInvalid: return "DiagonalInvalid";
    case Errc::WitnessSolveFailed: return "WitnessSolveFailed";
    case Errc::CommutationCheckFailed: return "CommutationCheckFailed";
    case Errc::NoNonScalarCommutant: return "NoNonScalarCommutant";
    case Errc::RecursionDepthExceeded: return "RecursionDepthExceeded";
    case Errc::DichotomyViolation: return "DichotomyViolation";
    case Errc::BoundViolated: return "BoundViolated";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Parse: return "Parse";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace opdiag

#endif
