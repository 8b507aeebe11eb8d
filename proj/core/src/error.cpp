#include "mocha/error.hpp"

namespace mocha {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonMonotonicTime: return "NON_MONOTONIC_TIME";
    case ErrorCode::TypeOutOfRange: return "TYPE_OUT_OF_RANGE";
    case ErrorCode::HorizonViolation: return "HORIZON_VIOLATION";
    case ErrorCode::EmptySequence: return "EMPTY_SEQUENCE";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::NumericOverflow: return "NUMERIC_OVERFLOW";
    case ErrorCode::NonIncreasingChain: return "NON_INCREASING_CHAIN";
    case ErrorCode::NonFiniteLoss: return "NON_FINITE_LOSS";
    case ErrorCode::Diverged: return "DIVERGED";
    case ErrorCode::BoundViolation: return "BOUND_VIOLATION";
    case ErrorCode::VersionMismatch: return "VERSION_MISMATCH";
    case ErrorCode::CorruptCheckpoint: return "CORRUPT_CHECKPOINT";
    case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::IoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace mocha
