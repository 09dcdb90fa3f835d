#include "pencil/errors.hpp"

namespace pencil {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularConstructionInput: return "SingularConstructionInput";
    case ErrorCode::BadShape: return "BadShape";
    case ErrorCode::DegenerateParameter: return "DegenerateParameter";
    case ErrorCode::BranchPoint: return "BranchPoint";
    case ErrorCode::LambdaTooSmall: return "LambdaTooSmall";
    case ErrorCode::ContinuationFailed: return "ContinuationFailed";
    case ErrorCode::PoleCollision: return "PoleCollision";
    case ErrorCode::WrongFamily: return "WrongFamily";
    case ErrorCode::BadBlockShape: return "BadBlockShape";
    case ErrorCode::ReductionViolated: return "ReductionViolated";
    case ErrorCode::ResonantParameters: return "ResonantParameters";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularMatrix:
    case ErrorCode::NonFinite:
    case ErrorCode::SingularConstructionInput:
    case ErrorCode::DegenerateParameter:
    case ErrorCode::BranchPoint:
    case ErrorCode::LambdaTooSmall:
    case ErrorCode::ContinuationFailed:
    case ErrorCode::PoleCollision:
    case ErrorCode::ResonantParameters:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace pencil
