#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trajzoom {

enum class ErrorCode {
  kOutOfRange,
  kInconsistent,
  kInvalidArgument,
  kEmptyPath,
  kNegativeStart,
  kStartOutOfStrip,
  kEpsNonpositive,
  kHorizonExceeded,
  kEmptySamples,
  kInsufficientSamples,
  kMissingLocalTimes,
  kParseError,
  kUnknownKey,
  kMissingColumn,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-readable code, the offending field (if any) and, for config
/// parsing, the 1-based line number.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string field, const std::string& message, int line = 0);

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::string field_;
  int line_;
};

}  // namespace trajzoom
