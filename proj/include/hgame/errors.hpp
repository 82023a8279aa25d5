#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hgame {

enum class ErrorCode {
  kInvalidArgument,
  kUnknownManeuver,
  kDegenerateLane,
  kInfeasible,
  kNumericalFailure,
  kMismatchedHorizon,
  kEmptyActionSet,
  kSolverFailure,
  kEmptyEquilibriumSet,
  kObservedActionMissing,
  kSingularDesign,
  kNonPositiveEta,
  kInvalidSplit,
  kParseError,
  kSchemaViolation,
  kTemplateUnsatisfiable,
  kUnknownModel,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnknownManeuver: return "UnknownManeuver";
    case ErrorCode::kDegenerateLane: return "DegenerateLane";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kMismatchedHorizon: return "MismatchedHorizon";
    case ErrorCode::kEmptyActionSet: return "EmptyActionSet";
    case ErrorCode::kSolverFailure: return "SolverFailure";
    case ErrorCode::kEmptyEquilibriumSet: return "EmptyEquilibriumSet";
    case ErrorCode::kObservedActionMissing: return "ObservedActionMissing";
    case ErrorCode::kSingularDesign: return "SingularDesign";
    case ErrorCode::kNonPositiveEta: return "NonPositiveEta";
    case ErrorCode::kInvalidSplit: return "InvalidSplit";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kTemplateUnsatisfiable: return "TemplateUnsatisfiable";
    case ErrorCode::kUnknownModel: return "UnknownModel";
  }
  return "Unknown";
}

// All library failures are reported through this type; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix, for rewrapping with more context.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

// Files that cannot be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hgame
