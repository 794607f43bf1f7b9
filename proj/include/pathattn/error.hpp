#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pathattn {

enum class ErrorCode {
  MalformedLine,
  MissingHeader,
  NonMonotonicTimestamp,
  InvalidBox,
  SlideMismatch,
  EmptySession,
  UnknownGrade,
  DegeneratePolygon,
  SelfIntersectingPolygon,
  EmptyInput,
  DimensionMismatch,
  EmptyString,
  NeedTwoObservers,
  ConstantInput,
  InsufficientData,
  ZeroVariance,
  OutOfRange,
  MissingPrediction,
  DuplicatePatch,
  BinOutOfRange,
  AspectMismatch,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure in the library surfaces as an Error carrying a typed code.
/// Line-oriented parsers also attach the 1-based line number.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::int64_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::int64_t> line() const noexcept { return line_; }
  /// The message without the code and line prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::optional<std::int64_t> line_;
  std::string detail_;
};

}  // namespace pathattn
