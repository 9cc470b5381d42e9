#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gctr {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateCloud,
  kZeroDiameter,
  kDegenerateTriangle,
  kNoValidTriplet,
  kEmptyPool,
  kDimensionMismatch,
  kNumericalCollapse,
  kInsufficientMatches,
  kNoConsensus,
  kZeroEdge,
  kDegenerateConfiguration,
  kTooFewPoints,
  kUnknownShape,
  kParseError,
  kUnsupportedFormat,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library is an Error carrying a machine-checkable
// code; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Malformed input file. `position` is a 1-based line number for text formats
// and a 0-based byte offset for binary payloads.
class ParseError : public Error {
 public:
  enum class Unit { kLine, kByte };

  ParseError(Unit unit, std::size_t position, const std::string& what);

  Unit unit() const noexcept { return unit_; }
  std::size_t position() const noexcept { return position_; }

 private:
  Unit unit_;
  std::size_t position_;
};

}  // namespace gctr
