#pragma once

#include <stdexcept>
#include <string>

namespace msgpass {

enum class ErrorCode {
  NonpositivePrecision,
  SingularMatrix,
  ZeroModulusSymbol,
  DegenerateSymbolBelief,
  BothFlat,
  AllZeroLikelihood,
  LengthMismatch,
  InvalidArgument,
  NotPositiveSemidefinite,
  InvariantViolation,
  Io,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers that need a policy
// (e.g. EP skip-update) switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace msgpass
