#pragma once

#include <stdexcept>
#include <string>

namespace dro {

enum class ErrorCode {
  kDimensionMismatch,
  kInvalidBounds,
  kNumericalBreakdown,
  kEnumerationCapExceeded,
  kPmpInfeasible,
  kIterationLimit,
  kDualUnbounded,
  kBigMViolation,
  kModelValidation,
  kRequiresFeasibleRecourse,
  kInvalidSpec,
  kInvalidInput,
  kOracleFailure,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidBounds: return "InvalidBounds";
    case ErrorCode::kNumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::kEnumerationCapExceeded: return "EnumerationCapExceeded";
    case ErrorCode::kPmpInfeasible: return "PmpInfeasible";
    case ErrorCode::kIterationLimit: return "IterationLimit";
    case ErrorCode::kDualUnbounded: return "DualUnbounded";
    case ErrorCode::kBigMViolation: return "BigMViolation";
    case ErrorCode::kModelValidation: return "ModelValidation";
    case ErrorCode::kRequiresFeasibleRecourse: return "RequiresFeasibleRecourse";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kOracleFailure: return "OracleFailure";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dro
