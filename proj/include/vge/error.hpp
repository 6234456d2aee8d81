#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vge {

enum class ErrorCode {
  kNonFinite,
  kNegativeMass,
  kMassMismatch,
  kTooFewMembers,
  kEmptyEnsemble,
  kShapeMismatch,
  kCacheMismatch,
  kLengthMismatch,
  kDegenerateVariance,
  kAllZero,
  kEmptyInput,
  kEmptySet,
  kInfeasibleConstruction,
  kDivergence,
  kParseError,
  kInconsistentShape,
  kInvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported through this type; `code()` identifies
// the failure class so callers (the CLI in particular) can map it to an exit
// status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace vge
