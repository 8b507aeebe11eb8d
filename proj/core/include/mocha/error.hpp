#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mocha {

enum class ErrorCode {
  NonMonotonicTime,
  TypeOutOfRange,
  HorizonViolation,
  EmptySequence,
  InvalidArgument,
  NumericOverflow,
  NonIncreasingChain,
  NonFiniteLoss,
  Diverged,
  BoundViolation,
  VersionMismatch,
  CorruptCheckpoint,
  ShapeMismatch,
  ParseError,
  IoError,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mocha
