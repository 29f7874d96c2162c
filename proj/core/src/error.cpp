#include "autopk/error.hpp"

namespace autopk {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedInput: return "MalformedInput";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::kReplayMiss: return "ReplayMiss";
    case ErrorCode::kUnboundPlaceholder: return "UnboundPlaceholder";
    case ErrorCode::kUnparseableVerdict: return "UnparseableVerdict";
    case ErrorCode::kNoTableFound: return "NoTableFound";
    case ErrorCode::kEmptySelection: return "EmptySelection";
    case ErrorCode::kInputTooLarge: return "InputTooLarge";
    case ErrorCode::kMissingGold: return "MissingGold";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace autopk
