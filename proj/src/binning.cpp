#include "calib/binning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "calib/error.hpp"

namespace calib {

namespace {
constexpr double kChamberTolerance = 1e-9;
}

PartitionSpec PartitionSpec::make(std::size_t num_classes, std::size_t depth,
                                  std::size_t cells_per_axis) {
  if (num_classes < 2) throw CalibError(ErrorCode::InvalidArgument, "K must be >= 2");
  if (depth < 1 || depth > num_classes) {
    throw CalibError(ErrorCode::DepthOutOfRange,
                     "k=" + std::to_string(depth) + " with K=" + std::to_string(num_classes));
  }
  if (depth == num_classes && num_classes > 2) {
    throw CalibError(ErrorCode::UnsupportedPartition,
                     "k = K > 2 requires a simplex partition");
  }
  if (cells_per_axis < 1) throw CalibError(ErrorCode::InvalidArgument, "mK must be >= 1");

  PartitionSpec spec;
  spec.num_classes_ = num_classes;
  spec.depth_ = depth;
  spec.cells_per_axis_ = cells_per_axis;
  spec.dimension_ = std::min(depth, num_classes - 1);
  std::uint64_t cells = 1;
  for (std::size_t j = 0; j < spec.dimension_; ++j) {
    if (cells > std::numeric_limits<std::uint64_t>::max() / cells_per_axis) {
      throw CalibError(ErrorCode::UnsupportedPartition, "(mK)^k overflows a 64-bit cell code");
    }
    cells *= cells_per_axis;
  }
  spec.cube_cells_ = cells;
  return spec;
}

double PartitionSpec::volume() const noexcept {
  return std::pow(side(), static_cast<double>(dimension_));
}

void check_in_chamber(std::span<const double> z_row, const PartitionSpec& spec) {
  const std::size_t k = spec.depth();
  if (z_row.size() != k) {
    throw CalibError(ErrorCode::DimensionMismatch, "row length differs from partition depth");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double z = z_row[j];
    if (!(z >= -kChamberTolerance && z <= 1.0 + kChamberTolerance) ||
        (j > 0 && z > z_row[j - 1] + kChamberTolerance)) {
      throw CalibError(ErrorCode::PointOutsideChamber, "coordinate " + std::to_string(j));
    }
    sum += z;
  }
  const double lo = static_cast<double>(k) / static_cast<double>(spec.num_classes());
  if (sum < lo - kChamberTolerance || sum > 1.0 + kChamberTolerance) {
    throw CalibError(ErrorCode::PointOutsideChamber, "coordinate sum " + std::to_string(sum));
  }
}

namespace {

std::uint32_t cell_index(double z, std::size_t cells_per_axis) {
  const double scaled = std::floor(z * static_cast<double>(cells_per_axis));
  if (scaled <= 0.0) return 0;
  const auto last = static_cast<double>(cells_per_axis - 1);
  return static_cast<std::uint32_t>(std::min(scaled, last));
}

}  // namespace

BinKey assign_bin(std::span<const double> z_row, const PartitionSpec& spec) {
  check_in_chamber(z_row, spec);
  BinKey key;
  key.cell.resize(spec.dimension());
  for (std::size_t j = 0; j < spec.dimension(); ++j) {
    key.cell[j] = cell_index(z_row[j], spec.cells_per_axis());
  }
  return key;
}

std::uint64_t bin_code(std::span<const double> z_row, const PartitionSpec& spec) {
  check_in_chamber(z_row, spec);
  std::uint64_t code = 0;
  for (std::size_t j = 0; j < spec.dimension(); ++j) {
    code = code * spec.cells_per_axis() + cell_index(z_row[j], spec.cells_per_axis());
  }
  return code;
}

BinKey key_from_code(std::uint64_t code, const PartitionSpec& spec) {
  BinKey key;
  key.cell.resize(spec.dimension());
  for (std::size_t j = spec.dimension(); j-- > 0;) {
    key.cell[j] = static_cast<std::uint32_t>(code % spec.cells_per_axis());
    code /= spec.cells_per_axis();
  }
  return key;
}

std::map<BinKey, std::vector<std::size_t>> group_by_bin(const TopKView& view,
                                                        const PartitionSpec& spec) {
  if (view.k != spec.depth() || view.num_classes != spec.num_classes()) {
    throw CalibError(ErrorCode::DimensionMismatch, "view and partition disagree on (K, k)");
  }
  std::map<BinKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < view.n; ++i) {
    groups[assign_bin(view.z_row(i), spec)].push_back(i);
  }
  return groups;
}

std::size_t choose_m(std::size_t n, std::size_t depth, std::size_t num_classes, double smoothness,
                     double constant) {
  if (!(smoothness > 0.0 && smoothness <= 1.0)) {
    throw CalibError(ErrorCode::InvalidArgument, "smoothness must lie in (0, 1]");
  }
  if (!(constant > 0.0)) throw CalibError(ErrorCode::InvalidArgument, "constant must be > 0");
  const double dim = static_cast<double>(std::min(depth, num_classes - 1));
  const double exponent = 2.0 / (4.0 * smoothness + dim);
  const double m = std::round(constant * std::pow(static_cast<double>(n), exponent));
  return m < 1.0 ? 1 : static_cast<std::size_t>(m);
}

}  // namespace calib
