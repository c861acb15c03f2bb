#pragma once

#include <cstddef>
#include <cstdint>

#include "calib/estimator.hpp"

namespace calib {

enum class Sigma0Method { closed_form_k1, quadrature, monte_carlo };

/// Default grid resolution (cells per 1/K along each axis) for quadrature.
inline constexpr std::size_t kDefaultQuadratureResolution = 400;
/// Default sample count for the Monte-Carlo route.
inline constexpr std::size_t kDefaultMonteCarloSamples = 1'000'000;

/// Null variance of n sqrt(w) T:
///   2 * integral over the chamber of ||z||_2^2 - 2 ||z||_3^3 + ||z||_2^4.
///
/// closed_form_k1 applies to k = 1 (and to k = K = 2, whose integrand on the
/// segment is four times the k = 1 integrand). `resolution` is the grid
/// refinement for quadrature (cell side 1/(resolution K)) and the sample
/// count for monte_carlo; 0 selects the default.
double sigma0_sq(std::size_t num_classes, std::size_t depth, Sigma0Method method,
                 std::size_t resolution = 0, std::uint64_t seed = 20240601);

/// Closed form when available, quadrature otherwise.
double sigma0_sq(std::size_t num_classes, std::size_t depth);

/// Rejection-sampling route with its standard error.
struct MonteCarloIntegral {
  double value = 0.0;
  double std_error = 0.0;
};
MonteCarloIntegral sigma0_sq_monte_carlo(std::size_t num_classes, std::size_t depth,
                                         std::size_t samples, std::uint64_t seed);

/// Plug-in variance for a miscalibrated model:
///   sum_i p_i ||m_i||^4 - (sum_i p_i ||m_i||^2)^2 + 4 sum_i p_i m_i^T C_i m_i,
/// with p_i = N_i / n and per-cell mean m_i and covariance C_i of U.
double sigma1_hat_sq(const BinStatsTable& stats, std::size_t n);

struct VarianceEstimates {
  double sigma0_sq = 0.0;
  double sigma1_hat_sq = 0.0;
  double sigma1_hat = 0.0;  // sqrt(max(sigma1_hat_sq, 0))
};

VarianceEstimates estimate_variances(const BinStatsTable& stats, std::size_t n,
                                     double sigma0_sq_value);

}  // namespace calib
