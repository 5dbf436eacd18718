#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace netprice {

enum class ErrorCode {
  SingularMatrix,
  NegativeDemand,
  AsymmetricTies,
  InvalidProbability,
  InvalidArgument,
  ParseError,
  TooFewVertices,
  InvalidPosition,
  NotHomogeneous,
  AssumptionViolated,
  AssumptionUnsatisfiable,
  IndexOutOfRange,
  InvariantViolated,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::NegativeDemand: return "NegativeDemand";
    case ErrorCode::AsymmetricTies: return "AsymmetricTies";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::TooFewVertices: return "TooFewVertices";
    case ErrorCode::InvalidPosition: return "InvalidPosition";
    case ErrorCode::NotHomogeneous: return "NotHomogeneous";
    case ErrorCode::AssumptionViolated: return "AssumptionViolated";
    case ErrorCode::AssumptionUnsatisfiable: return "AssumptionUnsatisfiable";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvariantViolated: return "InvariantViolated";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code so the
/// CLI can map it onto a structured error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace netprice
