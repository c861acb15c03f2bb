#include "calib/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "calib/error.hpp"
#include "calib/normal.hpp"
#include "calib/parallel.hpp"
#include "calib/quantile.hpp"
#include "calib/rng.hpp"

namespace calib {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw CalibError(ErrorCode::InvalidLevel, "alpha=" + std::to_string(alpha));
  }
}

}  // namespace

std::string_view to_string(IntervalCase c) noexcept {
  switch (c) {
    case IntervalCase::wide: return "wide";
    case IntervalCase::punctured: return "punctured";
    case IntervalCase::half_width: return "half-width";
  }
  return "unknown";
}

bool AdjustedInterval::contains(double x) const noexcept {
  if (x == 0.0 && includes_zero) return true;
  if (x == 0.0 && excludes_zero_point) return false;
  return x >= lower && x <= upper;
}

double zero_inclusion_threshold(double sigma0, std::size_t n, double w, double alpha) {
  check_alpha(alpha);
  return normal_quantile(1.0 - alpha) * sigma0 / (static_cast<double>(n) * std::sqrt(w));
}

AdjustedInterval adjusted_ci(double t_plus, double sigma1_hat, double sigma0, std::size_t n,
                             double w, double alpha) {
  check_alpha(alpha);
  if (!std::isfinite(t_plus) || t_plus < 0.0) {
    throw CalibError(ErrorCode::InvalidArgument, "t_plus must be finite and >= 0");
  }
  if (!std::isfinite(sigma1_hat) || sigma1_hat < 0.0) {
    throw CalibError(ErrorCode::InvalidArgument, "sigma1_hat must be finite and >= 0");
  }
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) {
    throw CalibError(ErrorCode::InvalidArgument, "sigma0 must be > 0");
  }
  if (!(w > 0.0)) throw CalibError(ErrorCode::InvalidArgument, "cell volume must be > 0");
  if (n < 2) throw CalibError(ErrorCode::TooFewExamples, "n must be >= 2");

  const double root_n = std::sqrt(static_cast<double>(n));
  const double h2 = normal_quantile(1.0 - alpha / 2.0) * sigma1_hat / root_n;
  const double h1 = normal_quantile(1.0 - alpha) * sigma1_hat / root_n;

  AdjustedInterval ci;
  ci.alpha = alpha;
  ci.degenerate_variance = sigma1_hat == 0.0;
  ci.upper = t_plus + h2;
  if (t_plus / 2.0 <= t_plus - h2) {
    ci.case_tag = IntervalCase::wide;
    ci.lower = t_plus - h2;
  } else if (t_plus - h1 < t_plus / 2.0) {
    ci.case_tag = IntervalCase::punctured;
    ci.lower = std::max(0.0, t_plus - h1);
    ci.excludes_zero_point = ci.lower == 0.0;
  } else {
    ci.case_tag = IntervalCase::half_width;
    ci.lower = t_plus / 2.0;
  }
  if (t_plus < zero_inclusion_threshold(sigma0, n, w, alpha)) {
    ci.includes_zero = true;
    ci.excludes_zero_point = false;
  }
  return ci;
}

CalibrationTest calibration_test(double t, double sigma0, std::size_t n, double w, double alpha) {
  check_alpha(alpha);
  if (!(sigma0 > 0.0)) throw CalibError(ErrorCode::InvalidArgument, "sigma0 must be > 0");
  CalibrationTest test;
  test.statistic = static_cast<double>(n) * std::sqrt(w) * t / sigma0;
  test.p_value = normal_upper_tail(test.statistic);
  test.reject = !(std::max(t, 0.0) < zero_inclusion_threshold(sigma0, n, w, alpha));
  return test;
}

std::vector<double> tcal_null_statistics(const TopKView& view, const PartitionSpec& spec,
                                         std::size_t reps, std::uint64_t seed) {
  const BinnedResiduals binned(view, spec);
  const std::size_t k = view.k;
  std::vector<double> stats(reps);
  ExceptionCollector errors;
  const auto total = static_cast<std::ptrdiff_t>(reps);
#pragma omp parallel
  {
    auto ws = binned.make_workspace();
    std::vector<double> u(view.n * k);
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < total; ++r) {
      errors.run([&] {
        Rng rng = make_rng(seed, {static_cast<std::uint64_t>(r)});
        for (std::size_t i = 0; i < view.n; ++i) {
          const auto z = view.z_row(i);
          const double draw = uniform01(rng);
          double cumulative = 0.0;
          std::size_t rank = k;
          for (std::size_t j = 0; j < k; ++j) {
            cumulative += z[j];
            if (draw < cumulative) {
              rank = j;
              break;
            }
          }
          for (std::size_t j = 0; j < k; ++j) u[i * k + j] = (j == rank ? 1.0 : 0.0) - z[j];
        }
        stats[static_cast<std::size_t>(r)] = binned.tcal_with_residuals(u, ws);
      });
    }
  }
  errors.rethrow();
  return stats;
}

double tcal_threshold(const TopKView& view, const PartitionSpec& spec, double alpha,
                      std::size_t reps, std::uint64_t seed) {
  check_alpha(alpha);
  if (reps < 100) throw CalibError(ErrorCode::InvalidArgument, "T-Cal needs >= 100 replications");
  return quantile(tcal_null_statistics(view, spec, reps, seed), 1.0 - alpha);
}

EstimateReport analyze(const TopKView& view, const PartitionSpec& spec, double alpha,
                       double sigma0_sq_value) {
  const auto stats = bin_stats(view, spec);
  EstimateReport report;
  report.estimate = debiased_ece(stats, view.n);
  report.variances = estimate_variances(stats, view.n, sigma0_sq_value);
  const double sigma0 = std::sqrt(sigma0_sq_value);
  const double w = spec.volume();
  report.ci_squared =
      adjusted_ci(report.estimate.t_plus, report.variances.sigma1_hat, sigma0, view.n, w, alpha);
  report.root_lower = std::sqrt(report.ci_squared.lower);
  report.root_upper = std::sqrt(report.ci_squared.upper);
  report.zero_threshold = zero_inclusion_threshold(sigma0, view.n, w, alpha);
  const auto test = calibration_test(report.estimate.t, sigma0, view.n, w, alpha);
  report.p_value_calibrated = test.p_value;
  report.reject_at_alpha = test.reject;
  return report;
}

EstimateReport analyze(const Dataset& data, const PartitionSpec& spec, double alpha,
                       std::optional<double> sigma0_sq_value) {
  const auto view = topk_project(data, spec.depth());
  const double s0 = sigma0_sq_value ? *sigma0_sq_value
                                    : sigma0_sq(spec.num_classes(), spec.depth());
  return analyze(view, spec, alpha, s0);
}

}  // namespace calib
