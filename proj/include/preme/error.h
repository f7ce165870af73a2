#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace preme {

enum class ErrorCode {
  kMalformedInput,
  kEmptyTranscript,
  kProviderUnavailable,
  kDimensionMismatch,
  kEmptyGeneration,
  kUnknownLabel,
  kEmptyDataset,
  kInsufficientData,
  kNumericalOverflow,
  kInconsistentInputs,
  kUnknownAspect,
  kUnknownSubject,
  kUnknownQuestion,
  kIllegalTransition,
  kInsufficientOverlap,
  kConfiguration,
  kNotFound,
};

std::string_view ErrorCodeName(ErrorCode code);

// All pipeline failures are reported through this type; the code carries the
// category so callers (CLI, HTTP layer) can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace preme
