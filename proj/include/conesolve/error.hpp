#pragma once

#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace conesolve {

enum class ErrorCode {
  InvalidArgument,
  InvalidSpec,
  DegenerateGrid,
  EllipticityViolation,
  NegativeZerothOrder,
  UnsupportedBC,
  NeumannRequiresZerothOrder,
  InvalidBoundaryCoefficient,
  SolverFailure,
  GridMismatch,
  NoConvergence,
  NotPositive,
  DegenerateE,
  SyntaxError,
  UnknownVariable,
  UnknownFunction,
  ArityError,
  EvalDomainError,
  MissingBinding,
  BoxViolation,
  NotASupersolution,
  NotASubsolution,
  MonotonicityViolation,
  ConditionCViolation,
  NonpositiveM,
  ConfigError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::DegenerateGrid: return "DegenerateGrid";
    case ErrorCode::EllipticityViolation: return "EllipticityViolation";
    case ErrorCode::NegativeZerothOrder: return "NegativeZerothOrder";
    case ErrorCode::UnsupportedBC: return "UnsupportedBC";
    case ErrorCode::NeumannRequiresZerothOrder: return "NeumannRequiresZerothOrder";
    case ErrorCode::InvalidBoundaryCoefficient: return "InvalidBoundaryCoefficient";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotPositive: return "NotPositive";
    case ErrorCode::DegenerateE: return "DegenerateE";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::UnknownFunction: return "UnknownFunction";
    case ErrorCode::ArityError: return "ArityError";
    case ErrorCode::EvalDomainError: return "EvalDomainError";
    case ErrorCode::MissingBinding: return "MissingBinding";
    case ErrorCode::BoxViolation: return "BoxViolation";
    case ErrorCode::NotASupersolution: return "NotASupersolution";
    case ErrorCode::NotASubsolution: return "NotASubsolution";
    case ErrorCode::MonotonicityViolation: return "MonotonicityViolation";
    case ErrorCode::ConditionCViolation: return "ConditionCViolation";
    case ErrorCode::NonpositiveM: return "NonpositiveM";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The code is
/// stable and meant for programmatic dispatch; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse-time error carrying the 1-based column of the offending token.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, const std::string& message, std::size_t column)
      : Error(code, message + " at column " + std::to_string(column)), column_(column) {}

  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Raised instead of producing NaN/Inf during expression evaluation.
class EvalDomainError : public Error {
 public:
  EvalDomainError(std::string function, double argument)
      : Error(ErrorCode::EvalDomainError,
              "'" + function + "' undefined at argument " + format_arg(argument)),
        function_(std::move(function)),
        argument_(argument) {}

  const std::string& function() const noexcept { return function_; }
  double argument() const noexcept { return argument_; }

 private:
  static std::string format_arg(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }

  std::string function_;
  double argument_;
};

}  // namespace conesolve
