#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace steward {

enum class ErrorKind {
  kConfig,
  kUnknownPredicate,
  kUnknownApp,
  kRegistry,
  kUnschedulableInstruction,
  kInvalidGraph,
  kCycle,
  kInvalidActionFromBackend,
  kLabelMismatch,
  kMissingResult,
  kMissingScript,
  kTransport,
  kParse,
  kInfeasibleMix,
  kMisalignedInputs,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure the library reports. The kind is stable
/// and is what the CLI prints in its single-line error output.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Failures raised by an agent backend (transport, parsing, missing script).
/// The engine degrades these to task-level ERROR verdicts.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace steward
