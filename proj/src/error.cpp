#include "pathattn/error.hpp"

namespace pathattn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::MissingHeader: return "MissingHeader";
    case ErrorCode::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::SlideMismatch: return "SlideMismatch";
    case ErrorCode::EmptySession: return "EmptySession";
    case ErrorCode::UnknownGrade: return "UnknownGrade";
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::SelfIntersectingPolygon: return "SelfIntersectingPolygon";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyString: return "EmptyString";
    case ErrorCode::NeedTwoObservers: return "NeedTwoObservers";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::DuplicatePatch: return "DuplicatePatch";
    case ErrorCode::BinOutOfRange: return "BinOutOfRange";
    case ErrorCode::AspectMismatch: return "AspectMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::int64_t> line) {
  std::string out(to_string(code));
  if (line) out += "(line " + std::to_string(*line) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::int64_t> line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line), detail_(message) {}

}  // namespace pathattn
