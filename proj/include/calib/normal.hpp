#pragma once

namespace calib {

/// Standard normal CDF.
double normal_cdf(double x) noexcept;

/// 1 - normal_cdf(x), accurate in the upper tail.
double normal_upper_tail(double x) noexcept;

/// Inverse standard normal CDF for p in (0, 1); throws InvalidLevel otherwise.
/// Rational initial guess refined by Halley steps against erfc.
double normal_quantile(double p);

}  // namespace calib
