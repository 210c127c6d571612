#include "contraction/error.hpp"

namespace contraction {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingBoundaryData: return "MissingBoundaryData";
    case ErrorCode::DerivativeMismatch: return "DerivativeMismatch";
    case ErrorCode::NonlinearConstraint: return "NonlinearConstraint";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptySampleSet: return "EmptySampleSet";
    case ErrorCode::MissingLambdaBound: return "MissingLambdaBound";
    case ErrorCode::SingularTheta: return "SingularTheta";
    case ErrorCode::CflViolation: return "CflViolation";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::DegenerateSeries: return "DegenerateSeries";
    case ErrorCode::SingularHessian: return "SingularHessian";
    case ErrorCode::InsufficientTrajectory: return "InsufficientTrajectory";
    case ErrorCode::NoClosedFormControl: return "NoClosedFormControl";
    case ErrorCode::SingularInformation: return "SingularInformation";
    case ErrorCode::DegenerateBasis: return "DegenerateBasis";
    case ErrorCode::BasisBoundaryViolation: return "BasisBoundaryViolation";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace contraction
