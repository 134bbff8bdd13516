#include "respire/errors.hpp"

namespace respire {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kEmptyAudio: return "EmptyAudio";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kUnknownConfig: return "UnknownConfig";
    case ErrorCode::kDegenerateData: return "DegenerateData";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kNonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::kInvalidBudget: return "InvalidBudget";
    case ErrorCode::kMalformedRow: return "MalformedRow";
    case ErrorCode::kDuplicateSampleId: return "DuplicateSampleId";
    case ErrorCode::kDanglingPair: return "DanglingPair";
    case ErrorCode::kTooFewUsers: return "TooFewUsers";
    case ErrorCode::kNoPairs: return "NoPairs";
    case ErrorCode::kNoInput: return "NoInput";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace respire
