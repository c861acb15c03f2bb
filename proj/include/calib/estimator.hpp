#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "calib/binning.hpp"
#include "calib/domain.hpp"

namespace calib {

/// Compensated accumulator.
class KahanSum {
 public:
  void add(double x) noexcept {
    const double y = x - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const noexcept { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Sufficient statistics of the residuals U for every non-empty cell,
/// ordered by lexicographic cell key. Bins of size one are kept.
struct BinStatsTable {
  PartitionSpec spec;
  std::vector<std::uint64_t> codes;
  std::vector<std::size_t> counts;
  std::vector<double> sum_u;      // bins x k
  std::vector<double> sum_usq;    // sum of ||U||^2
  std::vector<double> sum_outer;  // bins x k x k, sum of U U^T

  std::size_t size() const noexcept { return counts.size(); }
  std::size_t depth() const noexcept { return spec.depth(); }
  std::size_t total_count() const noexcept;

  BinKey key(std::size_t bin) const { return key_from_code(codes[bin], spec); }
  std::span<const double> sum_u_of(std::size_t bin) const noexcept {
    return {sum_u.data() + bin * depth(), depth()};
  }
  std::vector<double> mean_u(std::size_t bin) const;
  /// (1/N) sum U U^T - mean mean^T, row-major k x k.
  std::vector<double> cov_u(std::size_t bin) const;
};

/// Parallel (OpenMP) construction. Each cell is accumulated in example order,
/// so the result is bit-identical to bin_stats_serial for any thread count.
BinStatsTable bin_stats(const TopKView& view, const PartitionSpec& spec);

/// Reference implementation: one ordered-map pass over the examples.
BinStatsTable bin_stats_serial(const TopKView& view, const PartitionSpec& spec);

struct EstimateValue {
  double t = 0.0;
  double t_plus = 0.0;
  std::size_t n = 0;
  PartitionSpec spec;
};

/// T = (1/n) sum_{bins, N>=2} (||sum U||^2 - sum ||U||^2) / (N - 1).
EstimateValue debiased_ece(const BinStatsTable& stats, std::size_t n);

/// Same cross-pair sum with weight 1/N per bin.
double tcal_statistic(const BinStatsTable& stats, std::size_t n);

/// Cell assignment of a fixed set of examples, for recomputing the statistics
/// on resampled multisets (bootstrap, subsampling, label resampling) without
/// re-binning. Slots are dense cell ids in lexicographic order.
class BinnedResiduals {
 public:
  BinnedResiduals(const TopKView& view, const PartitionSpec& spec);

  std::size_t size() const noexcept { return slots_.size(); }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t num_slots() const noexcept { return num_slots_; }
  std::size_t slot(std::size_t i) const noexcept { return slots_[i]; }
  std::span<const double> u_row(std::size_t i) const noexcept {
    return {u_.data() + i * depth_, depth_};
  }

  /// Scratch buffers reused across calls; one per thread.
  struct Workspace {
    std::vector<std::size_t> counts;
    std::vector<KahanSum> sum_u;
    std::vector<KahanSum> sum_usq;
  };
  Workspace make_workspace() const;

  /// Debiased statistic of the examples at `indices` (duplicates count as
  /// distinct examples); the sample size is indices.size().
  double debiased(std::span<const std::size_t> indices, Workspace& ws) const;
  double tcal(std::span<const std::size_t> indices, Workspace& ws) const;

  /// T-Cal statistic of all examples with residual rows replaced by `u_rows`
  /// (row-major n x k).
  double tcal_with_residuals(std::span<const double> u_rows, Workspace& ws) const;

 private:
  std::size_t depth_ = 0;
  std::size_t num_slots_ = 0;
  std::vector<std::size_t> slots_;
  std::vector<double> u_;
};

}  // namespace calib
