#include "anoco/error.hpp"

namespace anoco {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::PayloadSizeMismatch: return "PayloadSizeMismatch";
    case ErrorCode::NonFiniteScalar: return "NonFiniteScalar";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::InconsistentAssignment: return "InconsistentAssignment";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonPositiveLambda: return "NonPositiveLambda";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoViews: return "NoViews";
    case ErrorCode::PoolTooSmall: return "PoolTooSmall";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::NoAnomalousPixels: return "NoAnomalousPixels";
    case ErrorCode::MissingMask: return "MissingMask";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace anoco
