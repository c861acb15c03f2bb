#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "calib/binning.hpp"
#include "calib/domain.hpp"
#include "calib/estimator.hpp"
#include "calib/variance.hpp"

namespace calib {

/// Which branch of the non-negativity-adjusted interval fired.
enum class IntervalCase { wide, punctured, half_width };

std::string_view to_string(IntervalCase c) noexcept;

/// Confidence set for ECE^2. The set is [lower, upper], minus the point 0 when
/// `excludes_zero_point`, plus the point 0 when `includes_zero`. With
/// includes_zero and lower > 0 the set is {0} together with [lower, upper].
struct AdjustedInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool excludes_zero_point = false;
  bool includes_zero = false;
  IntervalCase case_tag = IntervalCase::wide;
  double alpha = 0.1;
  bool degenerate_variance = false;

  bool contains(double x) const noexcept;
  /// Left end of the convex hull of the set.
  double hull_lower() const noexcept { return includes_zero ? 0.0 : lower; }
  double width() const noexcept { return upper - hull_lower(); }
};

/// z_alpha sigma0 / (n sqrt(w)): estimates below this are indistinguishable
/// from a calibrated model, and 0 joins the confidence set.
double zero_inclusion_threshold(double sigma0, std::size_t n, double w, double alpha);

/// With h2 = z_{alpha/2} s / sqrt(n), h1 = z_alpha s / sqrt(n), s = sigma1_hat:
///   wide       [t - h2, t + h2]             if t/2 <= t - h2
///   punctured  [max(0, t - h1), t + h2] \ 0  if t - h1 < t/2
///   half_width [t/2, t + h2]                otherwise,
/// then 0 is added when t < zero_inclusion_threshold. sigma1_hat = 0 gives
/// the point interval [t, t] flagged as degenerate.
AdjustedInterval adjusted_ci(double t_plus, double sigma1_hat, double sigma0, std::size_t n,
                             double w, double alpha);

struct CalibrationTest {
  double statistic = 0.0;  // n sqrt(w) t / sigma0
  double p_value = 0.5;    // one-sided
  bool reject = false;
};

/// One-sided test of ECE^2 = 0. `reject` uses the same threshold comparison
/// as the zero-inclusion rule, so it always agrees with 0 not in the interval.
CalibrationTest calibration_test(double t, double sigma0, std::size_t n, double w, double alpha);

/// T-Cal statistics of `reps` label resamplings (labels drawn from the
/// predicted probabilities, predictions held fixed), in replication order.
std::vector<double> tcal_null_statistics(const TopKView& view, const PartitionSpec& spec,
                                         std::size_t reps, std::uint64_t seed);

/// Empirical (1 - alpha) quantile of tcal_null_statistics. Requires reps >= 100.
double tcal_threshold(const TopKView& view, const PartitionSpec& spec, double alpha,
                      std::size_t reps, std::uint64_t seed);

struct EstimateReport {
  EstimateValue estimate;
  VarianceEstimates variances;
  AdjustedInterval ci_squared;
  double root_lower = 0.0;
  double root_upper = 0.0;
  double zero_threshold = 0.0;
  double p_value_calibrated = 0.5;
  bool reject_at_alpha = false;
};

/// Full pipeline: top-k projection, binning, estimate, variances, interval and
/// test. `sigma0_sq_value` defaults to sigma0_sq(K, k).
EstimateReport analyze(const Dataset& data, const PartitionSpec& spec, double alpha,
                       std::optional<double> sigma0_sq_value = std::nullopt);

/// Same from a prepared view.
EstimateReport analyze(const TopKView& view, const PartitionSpec& spec, double alpha,
                       double sigma0_sq_value);

}  // namespace calib
