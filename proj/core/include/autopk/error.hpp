#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace autopk {

enum class ErrorCode {
  kMalformedInput,
  kInvalidConfig,
  kIo,
  kDimensionMismatch,
  kProviderUnavailable,
  kReplayMiss,
  kUnboundPlaceholder,
  kUnparseableVerdict,
  kNoTableFound,
  kEmptySelection,
  kInputTooLarge,
  kMissingGold,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace autopk
