#include "calib/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "calib/error.hpp"
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

std::size_t default_subsample(std::size_t n, std::size_t requested) {
  return requested != 0
             ? requested
             : static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
}

}  // namespace

std::string_view to_string(ResampleMethod m) noexcept {
  switch (m) {
    case ResampleMethod::bootstrap: return "bootstrap";
    case ResampleMethod::subsampling: return "subsampling";
    case ResampleMethod::hulc: return "hulc";
  }
  return "unknown";
}

std::vector<double> bootstrap_replicates(const BinnedResiduals& sample, std::size_t reps,
                                         std::uint64_t seed) {
  const std::size_t n = sample.size();
  std::vector<double> values(reps);
  const auto total = static_cast<std::ptrdiff_t>(reps);
#pragma omp parallel
  {
    auto ws = sample.make_workspace();
    std::vector<std::size_t> idx(n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < total; ++r) {
      Rng rng = make_rng(seed, {static_cast<std::uint64_t>(r)});
      for (auto& i : idx) i = static_cast<std::size_t>(uniform_index(rng, n));
      values[static_cast<std::size_t>(r)] = sample.debiased(idx, ws);
    }
  }
  return values;
}

ResampleInterval bootstrap_ci(const BinnedResiduals& sample, const ResampleConfig& cfg) {
  check_alpha(cfg.alpha);
  if (cfg.replications < 1) throw CalibError(ErrorCode::InvalidArgument, "B must be >= 1");
  auto values = bootstrap_replicates(sample, cfg.replications, cfg.seed);
  std::sort(values.begin(), values.end());
  return {quantile_sorted(values, cfg.alpha / 2.0), quantile_sorted(values, 1.0 - cfg.alpha / 2.0),
          cfg.replications};
}

ResampleInterval bootstrap_ci(const Dataset& data, std::size_t depth, const PartitionSpec& spec,
                              const ResampleConfig& cfg) {
  return bootstrap_ci(BinnedResiduals(topk_project(data, depth), spec), cfg);
}

std::vector<double> subsample_replicates(const BinnedResiduals& sample, std::size_t size,
                                         std::size_t reps, std::uint64_t seed) {
  const std::size_t n = sample.size();
  if (size < 2 || size > n) {
    throw CalibError(ErrorCode::SubsampleTooSmall,
                     "subsample size " + std::to_string(size) + " with n=" + std::to_string(n));
  }
  std::vector<double> values(reps);
  const auto total = static_cast<std::ptrdiff_t>(reps);
#pragma omp parallel
  {
    auto ws = sample.make_workspace();
    std::vector<std::uint8_t> taken(n, 0);
    std::vector<std::size_t> idx;
    idx.reserve(size);
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < total; ++r) {
      Rng rng = make_rng(seed, {static_cast<std::uint64_t>(r)});
      idx.clear();
      // Floyd's sampling of `size` distinct indices.
      for (std::size_t j = n - size; j < n; ++j) {
        auto t = static_cast<std::size_t>(uniform_index(rng, j + 1));
        if (taken[t]) t = j;
        taken[t] = 1;
        idx.push_back(t);
      }
      for (std::size_t i : idx) taken[i] = 0;
      std::sort(idx.begin(), idx.end());
      values[static_cast<std::size_t>(r)] = sample.debiased(idx, ws);
    }
  }
  return values;
}

ResampleInterval subsampling_ci(const BinnedResiduals& sample, double full_statistic,
                                const ResampleConfig& cfg) {
  check_alpha(cfg.alpha);
  if (cfg.replications < 1) throw CalibError(ErrorCode::InvalidArgument, "B must be >= 1");
  const std::size_t n = sample.size();
  const std::size_t b = default_subsample(n, cfg.subsample_size);
  auto values = subsample_replicates(sample, b, cfg.replications, cfg.seed);
  std::sort(values.begin(), values.end());
  const double ratio =
      std::pow(static_cast<double>(b) / static_cast<double>(n), cfg.rate_exponent);
  const double q_lo = quantile_sorted(values, cfg.alpha / 2.0);
  const double q_hi = quantile_sorted(values, 1.0 - cfg.alpha / 2.0);
  return {full_statistic - ratio * (q_hi - full_statistic),
          full_statistic - ratio * (q_lo - full_statistic), cfg.replications};
}

ResampleInterval subsampling_ci(const Dataset& data, std::size_t depth, const PartitionSpec& spec,
                                const ResampleConfig& cfg) {
  const auto view = topk_project(data, depth);
  const double t = debiased_ece(bin_stats(view, spec), view.n).t;
  return subsampling_ci(BinnedResiduals(view, spec), t, cfg);
}

std::size_t hulc_splits(double alpha, double delta) {
  check_alpha(alpha);
  if (!(delta >= 0.0 && delta < 0.5)) {
    throw CalibError(ErrorCode::InvalidArgument, "HulC delta must lie in [0, 1/2)");
  }
  for (std::size_t b = 1;; ++b) {
    const double miss = std::pow(0.5 - delta, static_cast<double>(b)) +
                        std::pow(0.5 + delta, static_cast<double>(b));
    if (miss <= alpha) return b;
  }
}

std::vector<std::vector<std::size_t>> hulc_folds(std::size_t n, std::size_t splits,
                                                 std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(seed, {0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(uniform_index(rng, i))]);
  }
  std::vector<std::vector<std::size_t>> folds(splits);
  for (std::size_t p = 0; p < n; ++p) folds[p % splits].push_back(perm[p]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

ResampleInterval hulc_ci(const BinnedResiduals& sample, double alpha, std::uint64_t seed,
                         double delta) {
  const std::size_t splits = hulc_splits(alpha, delta);
  if (sample.size() < splits) {
    throw CalibError(ErrorCode::TooFewExamples, "HulC needs n >= " + std::to_string(splits));
  }
  auto ws = sample.make_workspace();
  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (const auto& fold : hulc_folds(sample.size(), splits, seed)) {
    const double t = sample.debiased(fold, ws);
    lo = first ? t : std::min(lo, t);
    hi = first ? t : std::max(hi, t);
    first = false;
  }
  return {lo, hi, splits};
}

ResampleInterval hulc_ci(const Dataset& data, std::size_t depth, const PartitionSpec& spec,
                         double alpha, std::uint64_t seed, double delta) {
  return hulc_ci(BinnedResiduals(topk_project(data, depth), spec), alpha, seed, delta);
}

}  // namespace calib
