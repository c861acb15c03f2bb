#pragma once

#include <span>
#include <vector>

namespace calib {

/// Linear interpolation between order statistics (Hyndman-Fan type 7).
/// `sorted` must be ascending and non-empty; p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

/// Sorts a copy and calls quantile_sorted.
double quantile(std::vector<double> values, double p);

}  // namespace calib
