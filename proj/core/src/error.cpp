#include "gctr/error.h"

namespace gctr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerateCloud: return "DegenerateCloud";
    case ErrorCode::kZeroDiameter: return "ZeroDiameter";
    case ErrorCode::kDegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::kNoValidTriplet: return "NoValidTriplet";
    case ErrorCode::kEmptyPool: return "EmptyPool";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNumericalCollapse: return "NumericalCollapse";
    case ErrorCode::kInsufficientMatches: return "InsufficientMatches";
    case ErrorCode::kNoConsensus: return "NoConsensus";
    case ErrorCode::kZeroEdge: return "ZeroEdge";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kUnknownShape: return "UnknownShape";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

namespace {

std::string describe(ParseError::Unit unit, std::size_t position,
                     const std::string& what) {
  if (unit == ParseError::Unit::kLine) {
    return "line " + std::to_string(position) + ": " + what;
  }
  return "byte offset " + std::to_string(position) + ": " + what;
}

}  // namespace

ParseError::ParseError(Unit unit, std::size_t position, const std::string& what)
    : Error(ErrorCode::kParseError, describe(unit, position, what)),
      unit_(unit),
      position_(position) {}

}  // namespace gctr
