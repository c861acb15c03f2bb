#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "calib/domain.hpp"

namespace calib {

/// Cubic partition of the truncated Weyl chamber
///   { z_1 >= ... >= z_k >= 0, k/K <= sum z <= 1 }
/// into cells of side 1/(mK). The resolution is stored as the integer mK
/// (`cells_per_axis`), so m itself may be fractional when mK is not a
/// multiple of K.
///
/// For k = K = 2 the chamber is a segment parametrised by the top coordinate;
/// cells are intervals of that coordinate and the effective dimension is 1.
/// k = K > 2 needs a simplex partition and is rejected.
class PartitionSpec {
 public:
  static PartitionSpec make(std::size_t num_classes, std::size_t depth, std::size_t cells_per_axis);
  static PartitionSpec from_m(std::size_t num_classes, std::size_t depth, std::size_t m) {
    return make(num_classes, depth, m * num_classes);
  }

  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t cells_per_axis() const noexcept { return cells_per_axis_; }
  double m() const noexcept {
    return static_cast<double>(cells_per_axis_) / static_cast<double>(num_classes_);
  }
  /// Number of coordinates that index a cell: min(k, K - 1).
  std::size_t dimension() const noexcept { return dimension_; }
  double side() const noexcept { return 1.0 / static_cast<double>(cells_per_axis_); }
  /// Cell volume side^dimension.
  double volume() const noexcept;
  /// (mK)^dimension, the number of cells of the bounding cube.
  std::uint64_t cube_cells() const noexcept { return cube_cells_; }

  friend bool operator==(const PartitionSpec&, const PartitionSpec&) = default;

 private:
  std::size_t num_classes_ = 2;
  std::size_t depth_ = 1;
  std::size_t cells_per_axis_ = 1;
  std::size_t dimension_ = 1;
  std::uint64_t cube_cells_ = 1;
};

struct BinKey {
  std::vector<std::uint32_t> cell;

  friend auto operator<=>(const BinKey&, const BinKey&) = default;
  friend bool operator==(const BinKey&, const BinKey&) = default;
};

/// Throws PointOutsideChamber when `z_row` is not a sorted top-k vector of a
/// K-class probability vector (tolerance 1e-9).
void check_in_chamber(std::span<const double> z_row, const PartitionSpec& spec);

/// Cell index i_j = floor(z_j * mK), clamped into [0, mK - 1].
BinKey assign_bin(std::span<const double> z_row, const PartitionSpec& spec);

/// Row-major linearisation of assign_bin; ordering of codes is the
/// lexicographic ordering of keys.
std::uint64_t bin_code(std::span<const double> z_row, const PartitionSpec& spec);
BinKey key_from_code(std::uint64_t code, const PartitionSpec& spec);

/// Example indices per non-empty cell, in ascending index order.
std::map<BinKey, std::vector<std::size_t>> group_by_bin(const TopKView& view,
                                                        const PartitionSpec& spec);

/// Bin-count rule m = max(1, round(c * n^{2/(4s + min(k, K-1))})).
std::size_t choose_m(std::size_t n, std::size_t depth, std::size_t num_classes,
                     double smoothness = 1.0, double constant = 1.0);

}  // namespace calib
