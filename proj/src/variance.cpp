#include "calib/variance.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "calib/error.hpp"
#include "calib/rng.hpp"

namespace calib {

namespace {

void check_depth(std::size_t num_classes, std::size_t depth) {
  if (num_classes < 2) throw CalibError(ErrorCode::InvalidArgument, "K must be >= 2");
  if (depth < 1 || depth > num_classes) {
    throw CalibError(ErrorCode::DepthOutOfRange,
                     "k=" + std::to_string(depth) + " with K=" + std::to_string(num_classes));
  }
  if (depth == num_classes && num_classes > 2) {
    throw CalibError(ErrorCode::UnsupportedPartition, "k = K > 2");
  }
}

// Antiderivative of z^2 - 2 z^3 + z^4.
double top1_antiderivative(double z) {
  return z * z * z / 3.0 - z * z * z * z / 2.0 + z * z * z * z * z / 5.0;
}

double closed_form_top1(std::size_t num_classes) {
  return 2.0 * (top1_antiderivative(1.0) - top1_antiderivative(1.0 / static_cast<double>(num_classes)));
}

double integrand(std::span<const double> z) {
  double sq = 0.0;
  double cube = 0.0;
  for (double v : z) {
    sq += v * v;
    cube += v * v * v;
  }
  return sq - 2.0 * cube + sq * sq;
}

// The k = K = 2 segment parametrised by its top coordinate t in [1/2, 1].
double segment_integrand(double t) {
  const double z[2] = {t, 1.0 - t};
  return integrand(z);
}

// Recursively visits grid cells (side h) whose centers are sorted
// non-increasing with sum <= 1; adds the integrand when sum >= lo.
void visit_cells(std::vector<double>& point, std::size_t j, double prefix, double h,
                 double lo, double& acc) {
  const std::size_t k = point.size();
  const double cap = j == 0 ? 1.0 : point[j - 1];
  for (std::size_t c = 0;; ++c) {
    const double z = (static_cast<double>(c) + 0.5) * h;
    if (z > cap || prefix + z > 1.0) break;
    point[j] = z;
    if (j + 1 == k) {
      if (prefix + z >= lo) acc += integrand(point);
    } else {
      visit_cells(point, j + 1, prefix + z, h, lo, acc);
    }
  }
}

double quadrature(std::size_t num_classes, std::size_t depth, std::size_t resolution) {
  const double h = 1.0 / static_cast<double>(resolution * num_classes);
  if (depth == num_classes) {
    // Midpoint rule in the top coordinate over [1/2, 1].
    const std::size_t cells = resolution;  // (1/2) / h with K = 2
    double acc = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      acc += segment_integrand(0.5 + (static_cast<double>(c) + 0.5) * h);
    }
    return 2.0 * acc * h;
  }
  const double lo = static_cast<double>(depth) / static_cast<double>(num_classes);
  const auto first_cells = static_cast<std::ptrdiff_t>(resolution * num_classes);
  std::vector<double> partial(static_cast<std::size_t>(first_cells), 0.0);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t c = 0; c < first_cells; ++c) {
    std::vector<double> point(depth);
    point[0] = (static_cast<double>(c) + 0.5) * h;
    double acc = 0.0;
    if (depth == 1) {
      if (point[0] >= lo) acc = integrand(point);
    } else {
      visit_cells(point, 1, point[0], h, lo, acc);
    }
    partial[static_cast<std::size_t>(c)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return 2.0 * total * std::pow(h, static_cast<double>(depth));
}

}  // namespace

MonteCarloIntegral sigma0_sq_monte_carlo(std::size_t num_classes, std::size_t depth,
                                         std::size_t samples, std::uint64_t seed) {
  check_depth(num_classes, depth);
  if (samples < 1000) throw CalibError(ErrorCode::ResolutionTooCoarse, "need >= 1000 samples");
  Rng rng = make_rng(seed, {num_classes, depth});
  auto unif = [](Rng& r) { return uniform01(r); };

  // Box prod_j [0, 1/j] contains the chamber (z_j <= 1/j since the sorted
  // coordinates sum to at most one); for k = K = 2 sample the top coordinate.
  const bool segment = depth == num_classes;
  double box = segment ? 0.5 : 1.0;
  if (!segment) {
    for (std::size_t j = 1; j <= depth; ++j) box /= static_cast<double>(j);
  }
  const double lo = static_cast<double>(depth) / static_cast<double>(num_classes);
  std::vector<double> z(depth);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    double f = 0.0;
    if (segment) {
      f = segment_integrand(0.5 + 0.5 * unif(rng));
    } else {
      double total = 0.0;
      bool inside = true;
      for (std::size_t j = 0; j < depth; ++j) {
        z[j] = unif(rng) / static_cast<double>(j + 1);
        total += z[j];
        if (j > 0 && z[j] > z[j - 1]) inside = false;
      }
      if (inside && total >= lo && total <= 1.0) f = integrand(z);
    }
    sum += f;
    sum_sq += f * f;
  }
  const double ns = static_cast<double>(samples);
  const double mean = sum / ns;
  const double var = std::max(sum_sq / ns - mean * mean, 0.0);
  return {2.0 * box * mean, 2.0 * box * std::sqrt(var / ns)};
}

double sigma0_sq(std::size_t num_classes, std::size_t depth, Sigma0Method method,
                 std::size_t resolution, std::uint64_t seed) {
  check_depth(num_classes, depth);
  switch (method) {
    case Sigma0Method::closed_form_k1:
      if (depth == 1) return closed_form_top1(num_classes);
      if (depth == 2 && num_classes == 2) return 4.0 * closed_form_top1(2);
      throw CalibError(ErrorCode::InvalidArgument, "closed form only covers k = 1 and k = K = 2");
    case Sigma0Method::quadrature:
      if (resolution == 0) resolution = kDefaultQuadratureResolution;
      if (resolution < 10) {
        throw CalibError(ErrorCode::ResolutionTooCoarse,
                         "quadrature resolution " + std::to_string(resolution) + " < 10");
      }
      return quadrature(num_classes, depth, resolution);
    case Sigma0Method::monte_carlo:
      return sigma0_sq_monte_carlo(num_classes, depth,
                                   resolution == 0 ? kDefaultMonteCarloSamples : resolution, seed)
          .value;
  }
  throw CalibError(ErrorCode::InvalidArgument, "unknown sigma0 method");
}

double sigma0_sq(std::size_t num_classes, std::size_t depth) {
  if (depth == 1 || (depth == 2 && num_classes == 2)) {
    return sigma0_sq(num_classes, depth, Sigma0Method::closed_form_k1);
  }
  // Keep the grid near 10^8 cells for deeper chambers.
  std::size_t resolution = kDefaultQuadratureResolution;
  if (depth >= 3) {
    const double budget = 1e8 * std::tgamma(static_cast<double>(depth) + 1.0);
    resolution = std::max<std::size_t>(
        10, static_cast<std::size_t>(std::pow(budget, 1.0 / static_cast<double>(depth)) /
                                     static_cast<double>(num_classes)));
    resolution = std::min(resolution, kDefaultQuadratureResolution);
  }
  return sigma0_sq(num_classes, depth, Sigma0Method::quadrature, resolution);
}

double sigma1_hat_sq(const BinStatsTable& stats, std::size_t n) {
  if (stats.total_count() != n) {
    throw CalibError(ErrorCode::CountMismatch, "bin counts do not sum to n");
  }
  const std::size_t k = stats.depth();
  const auto total = static_cast<double>(n);
  double fourth = 0.0;
  double second = 0.0;
  double quad = 0.0;
  for (std::size_t b = 0; b < stats.size(); ++b) {
    const double weight = static_cast<double>(stats.counts[b]) / total;
    const auto mean = stats.mean_u(b);
    const auto cov = stats.cov_u(b);
    double norm_sq = 0.0;
    for (double m : mean) norm_sq += m * m;
    double form = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t l = 0; l < k; ++l) form += mean[j] * cov[j * k + l] * mean[l];
    }
    fourth += weight * norm_sq * norm_sq;
    second += weight * norm_sq;
    quad += weight * form;
  }
  return fourth - second * second + 4.0 * quad;
}

VarianceEstimates estimate_variances(const BinStatsTable& stats, std::size_t n,
                                     double sigma0_sq_value) {
  VarianceEstimates v;
  v.sigma0_sq = sigma0_sq_value;
  v.sigma1_hat_sq = sigma1_hat_sq(stats, n);
  v.sigma1_hat = std::sqrt(std::max(v.sigma1_hat_sq, 0.0));
  return v;
}

}  // namespace calib
