#include "draco/error.hpp"

namespace draco {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidRange: return "invalid-range";
    case ErrorCode::kOutOfDomain: return "out-of-domain";
    case ErrorCode::kDegenerateDistribution: return "degenerate-distribution";
    case ErrorCode::kDirectionUndefined: return "direction-undefined";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kDegenerateFeature: return "degenerate-feature";
    case ErrorCode::kOutOfBounds: return "out-of-bounds";
    case ErrorCode::kLowForeground: return "low-foreground";
    case ErrorCode::kSynthesisExhausted: return "synthesis-exhausted";
    case ErrorCode::kIoError: return "io-error";
    case ErrorCode::kSchemaMismatch: return "manifest-schema-mismatch";
    case ErrorCode::kConfigError: return "config-error";
    case ErrorCode::kNumericalAbort: return "non-finite-loss";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kDegenerateLabels: return "degenerate-labels";
    case ErrorCode::kNoGenuineMate: return "no-genuine-mate";
    case ErrorCode::kJoinMismatch: return "join-mismatch";
  }
  return "unknown";
}

}  // namespace draco
