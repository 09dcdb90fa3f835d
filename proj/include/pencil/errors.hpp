#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pencil {

enum class ErrorCode {
  SingularMatrix,
  NonFinite,
  DimensionMismatch,
  SingularConstructionInput,
  BadShape,
  DegenerateParameter,
  BranchPoint,
  LambdaTooSmall,
  ContinuationFailed,
  PoleCollision,
  WrongFamily,
  BadBlockShape,
  ReductionViolated,
  ResonantParameters,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// True for failures caused by landing on a singular parameter value
/// (resample lambda or the structure seed) as opposed to misuse.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pencil
