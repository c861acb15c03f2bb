#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "calib/binning.hpp"
#include "calib/domain.hpp"
#include "calib/estimator.hpp"

namespace calib {

enum class ResampleMethod { bootstrap, subsampling, hulc };

struct ResampleConfig {
  ResampleMethod method = ResampleMethod::bootstrap;
  std::size_t replications = 1000;
  /// Subsample size b; 0 selects floor(sqrt(n)).
  std::size_t subsample_size = 0;
  /// Convergence rate exponent: tau_n = n^rate_exponent.
  double rate_exponent = 0.5;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  /// HulC median-bias bound.
  double hulc_delta = 0.0;
};

/// Plain closed interval [lower, upper] produced by a resampling baseline.
struct ResampleInterval {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t replications = 0;

  bool contains(double x) const noexcept { return x >= lower && x <= upper; }
  double width() const noexcept { return upper - lower; }
};

/// Percentile bootstrap: B resamples of size n with replacement, interval
/// [q_{alpha/2}, q_{1-alpha/2}] of the replicate statistics.
ResampleInterval bootstrap_ci(const BinnedResiduals& sample, const ResampleConfig& cfg);
ResampleInterval bootstrap_ci(const Dataset& data, std::size_t depth, const PartitionSpec& spec,
                              const ResampleConfig& cfg);

/// Subsampling without replacement at size b, centred at the full-sample
/// statistic and rescaled by tau_b / tau_n:
///   [T - r (q_{1-alpha/2} - T), T - r (q_{alpha/2} - T)],  r = (b/n)^rate.
ResampleInterval subsampling_ci(const BinnedResiduals& sample, double full_statistic,
                                const ResampleConfig& cfg);
ResampleInterval subsampling_ci(const Dataset& data, std::size_t depth, const PartitionSpec& spec,
                                const ResampleConfig& cfg);

/// Smallest B with (1/2 - delta)^B + (1/2 + delta)^B <= alpha.
std::size_t hulc_splits(double alpha, double delta = 0.0);

/// HulC: split the data at random into B near-equal folds and return the
/// range of the per-fold statistics.
ResampleInterval hulc_ci(const BinnedResiduals& sample, double alpha, std::uint64_t seed,
                         double delta = 0.0);
ResampleInterval hulc_ci(const Dataset& data, std::size_t depth, const PartitionSpec& spec,
                         double alpha, std::uint64_t seed, double delta = 0.0);

/// The statistics behind each baseline, exposed for testing.
std::vector<double> bootstrap_replicates(const BinnedResiduals& sample, std::size_t reps,
                                         std::uint64_t seed);
std::vector<double> subsample_replicates(const BinnedResiduals& sample, std::size_t size,
                                         std::size_t reps, std::uint64_t seed);
/// Fold membership used by hulc_ci (each fold ascending).
std::vector<std::vector<std::size_t>> hulc_folds(std::size_t n, std::size_t splits,
                                                 std::uint64_t seed);

std::string_view to_string(ResampleMethod m) noexcept;

}  // namespace calib
