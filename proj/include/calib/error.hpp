#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace calib {

enum class ErrorCode {
  NonFiniteEntry,
  NegativeProbability,
  RowSumOutOfTolerance,
  LabelOutOfRange,
  EmptyDataset,
  DimensionMismatch,
  DepthOutOfRange,
  PointOutsideChamber,
  UnsupportedPartition,
  CountMismatch,
  ResolutionTooCoarse,
  InvalidLevel,
  SubsampleTooSmall,
  TooFewExamples,
  InvalidCounts,
  InvalidArgument,
  QuadratureNotConverged,
  MalformedHeader,
  MalformedRow,
  MixedLabelModes,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Numerical failures map to CLI exit code 3, everything else to 2.
bool is_numerical(ErrorCode code) noexcept;

class CalibError : public std::runtime_error {
 public:
  CalibError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the error-code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Raised by the CSV reader; carries the 1-based line number of the offending row.
class ParseError : public CalibError {
 public:
  ParseError(ErrorCode code, std::size_t line, const std::string& what)
      : CalibError(code, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace calib
