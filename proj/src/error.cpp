#include "calib/error.hpp"

namespace calib {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::NegativeProbability: return "NegativeProbability";
    case ErrorCode::RowSumOutOfTolerance: return "RowSumOutOfTolerance";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DepthOutOfRange: return "DepthOutOfRange";
    case ErrorCode::PointOutsideChamber: return "PointOutsideChamber";
    case ErrorCode::UnsupportedPartition: return "UnsupportedPartition";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::InvalidLevel: return "InvalidLevel";
    case ErrorCode::SubsampleTooSmall: return "SubsampleTooSmall";
    case ErrorCode::TooFewExamples: return "TooFewExamples";
    case ErrorCode::InvalidCounts: return "InvalidCounts";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::MixedLabelModes: return "MixedLabelModes";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) noexcept {
  return code == ErrorCode::QuadratureNotConverged;
}

}  // namespace calib
