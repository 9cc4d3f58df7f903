#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace anoco {

enum class ErrorCode {
  BadMagic,
  VersionUnsupported,
  UnsupportedDtype,
  TruncatedPayload,
  PayloadSizeMismatch,
  NonFiniteScalar,
  IoFailure,
  DimensionMismatch,
  EmptyPool,
  InconsistentAssignment,
  ShapeMismatch,
  NonPositiveLambda,
  EmptyInput,
  NoViews,
  PoolTooSmall,
  SingleClass,
  NoPositives,
  NoAnomalousPixels,
  MissingMask,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Input or contract violation. Carries a stable code so callers (and the
/// CLI's machine-readable error line) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace anoco
