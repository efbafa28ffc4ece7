#pragma once

#include <stdexcept>
#include <string>

namespace aslab {

enum class ErrorCode {
  // core
  DuplicateId,
  MissingParent,
  DraftLimitExceeded,
  InvariantViolation,
  // backend
  ProviderUnavailable,
  ContextOverflow,
  AuthError,
  ScriptMiss,
  // operators
  OutOfRange,
  ParseFailure,
  PreconditionViolation,
  // taskenv
  SandboxSetupError,
  // metrics / diversity
  NonPositiveTeams,
  EmptyInput,
  EmptyHistogram,
  ZeroVariance,
  DegenerateLeaderboard,
  EmptyStratum,
  DisconnectedComparisonGraph,
  InsufficientData,
  // cli
  ConfigError,
  NoLogsFound,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace aslab
