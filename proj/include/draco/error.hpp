#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace draco {

enum class ErrorCode {
  kInvalidRange,
  kOutOfDomain,
  kDegenerateDistribution,
  kDirectionUndefined,
  kShapeMismatch,
  kLengthMismatch,
  kDegenerateFeature,
  kOutOfBounds,
  kLowForeground,
  kSynthesisExhausted,
  kIoError,
  kSchemaMismatch,
  kConfigError,
  kNumericalAbort,
  kEmptyInput,
  kDegenerateLabels,
  kNoGenuineMate,
  kJoinMismatch,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so
// callers (notably the CLI) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace draco
