#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace respire {

// Failure categories surfaced by every module. The CLI maps these onto exit codes.
enum class ErrorCode {
  kCorruptFile,
  kEmptyAudio,
  kTooShort,
  kInvalidArgument,
  kEmptySet,
  kBadMagic,
  kVersionUnsupported,
  kDimensionMismatch,
  kTruncatedPayload,
  kUnknownConfig,
  kDegenerateData,
  kSingleClass,
  kNonFiniteFeature,
  kInvalidBudget,
  kMalformedRow,
  kDuplicateSampleId,
  kDanglingPair,
  kTooFewUsers,
  kNoPairs,
  kNoInput,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace respire
