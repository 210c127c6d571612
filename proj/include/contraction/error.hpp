#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace contraction {

enum class ErrorCode {
  MissingBoundaryData,
  DerivativeMismatch,
  NonlinearConstraint,
  ShapeMismatch,
  EmptySampleSet,
  MissingLambdaBound,
  SingularTheta,
  CflViolation,
  NonFiniteState,
  DegenerateSeries,
  SingularHessian,
  InsufficientTrajectory,
  NoClosedFormControl,
  SingularInformation,
  DegenerateBasis,
  BasisBoundaryViolation,
  UnknownScenario,
  BadParams,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so that
// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace contraction
