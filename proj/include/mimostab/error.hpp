#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mimostab {

enum class Errc {
  InvalidInput,
  NotHurwitz,
  AxisEigenvalue,
  Unstabilizable,
  NumericalFailure,
  Diverged,
  NotDiagonalizable,
  DecompositionFailed,
  NotMajorized,
  ConstructionFailed,
  Unsupported,
  CodecInvalid,
  EpsilonExhausted,
  ParseError,
  DimensionMismatch,
  InvariantViolation,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::NotHurwitz: return "NotHurwitz";
    case Errc::AxisEigenvalue: return "AxisEigenvalue";
    case Errc::Unstabilizable: return "Unstabilizable";
    case Errc::NumericalFailure: return "NumericalFailure";
    case Errc::Diverged: return "Diverged";
    case Errc::NotDiagonalizable: return "NotDiagonalizable";
    case Errc::DecompositionFailed: return "DecompositionFailed";
    case Errc::NotMajorized: return "NotMajorized";
    case Errc::ConstructionFailed: return "ConstructionFailed";
    case Errc::Unsupported: return "Unsupported";
    case Errc::CodecInvalid: return "CodecInvalid";
    case Errc::EpsilonExhausted: return "EpsilonExhausted";
    case Errc::ParseError: return "ParseError";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code and the module that raised it,
/// e.g. "numerics.NotHurwitz".
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string module, const std::string& message)
      : std::runtime_error(message), code_(code), module_(std::move(module)) {}

  Errc code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }
  std::string qualified_code() const {
    return module_ + "." + std::string(to_string(code_));
  }

 private:
  Errc code_;
  std::string module_;
};

}  // namespace mimostab
