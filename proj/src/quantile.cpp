#include "calib/quantile.hpp"

#include <algorithm>
#include <cmath>

#include "calib/error.hpp"

namespace calib {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw CalibError(ErrorCode::InvalidArgument, "quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw CalibError(ErrorCode::InvalidLevel, "quantile level");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

}  // namespace calib
