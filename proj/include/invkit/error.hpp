#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace invkit {

enum class ErrorCode {
  DomainError,
  EmptyOperand,
  DegenerateBox,
  NegativeRadius,
  SyntaxError,
  UnknownVariable,
  NonIntegerExponent,
  NonDifferentiable,
  NotConverging,
  OriginOutside,
  MisalignedBox,
  InvalidArgument,
  IterationBudgetExceeded,
  CertificationFailure,
  EmptyResult,
  InfeasibleStart,
  ConformanceBreach,
  ConfigError,
  IoError,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library. The code mirrors
/// the error names used in CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace invkit
