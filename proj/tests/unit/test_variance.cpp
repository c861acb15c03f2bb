#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "calib/error.hpp"
#include "calib/estimator.hpp"
#include "calib/simulate.hpp"
#include "calib/variance.hpp"
#include "support/oracles.hpp"

using namespace calib;
using Catch::Approx;

TEST_CASE("null variance closed form", "[variance]") {
  CHECK(sigma0_sq(2, 1, Sigma0Method::closed_form_k1) == Approx(1.0 / 30.0).epsilon(1e-14));
  CHECK(sigma0_sq(3, 1, Sigma0Method::closed_form_k1) == Approx(0.0526749).epsilon(1e-6));
  CHECK(sigma0_sq(2, 1) == sigma0_sq(2, 1, Sigma0Method::closed_form_k1));
}

TEST_CASE("null variance is positive and monotone in K for k = 1", "[variance][property]") {
  // The integrand is positive on (0, 1), so widening [1/K, 1] can only add mass.
  double prev = sigma0_sq(2, 1);
  CHECK(prev > 0.0);
  for (std::size_t K = 3; K <= 100; ++K) {
    const double cur = sigma0_sq(K, 1);
    CHECK(cur > 0.0);
    CHECK(cur > prev);
    CHECK(cur < 1.0 / 15.0);
    prev = cur;
  }
}

TEST_CASE("quadrature agrees with Monte Carlo for K = 10, k = 2", "[variance]") {
  const double quad = sigma0_sq(10, 2, Sigma0Method::quadrature);
  const double mc = sigma0_sq(10, 2, Sigma0Method::monte_carlo);
  CHECK(std::abs(quad / mc - 1.0) < 0.005);
  const auto est = sigma0_sq_monte_carlo(10, 2, kDefaultMonteCarloSamples, 20240601);
  CHECK(est.std_error > 0.0);
  CHECK(est.value == mc);
}

TEST_CASE("general routes reproduce the closed form", "[variance]") {
  const double exact = sigma0_sq(3, 1, Sigma0Method::closed_form_k1);
  CHECK(sigma0_sq(3, 1, Sigma0Method::quadrature) == Approx(exact).epsilon(1e-4));
  CHECK(sigma0_sq(3, 1, Sigma0Method::monte_carlo) == Approx(exact).epsilon(0.01));
  // Full calibration of a binary model: four times the top-1 integrand.
  CHECK(sigma0_sq(2, 2) == Approx(4.0 / 30.0).epsilon(1e-14));
  CHECK(sigma0_sq(2, 2, Sigma0Method::quadrature) == Approx(4.0 / 30.0).epsilon(1e-4));
}

TEST_CASE("null variance argument checks", "[variance]") {
  CHECK_THROWS_AS(sigma0_sq(3, 2, Sigma0Method::quadrature, 5), CalibError);
  CHECK_THROWS_AS(sigma0_sq(3, 2, Sigma0Method::closed_form_k1), CalibError);
  CHECK_THROWS_AS(sigma0_sq(3, 3), CalibError);
  CHECK_THROWS_AS(sigma0_sq_monte_carlo(3, 2, 10, 1), CalibError);
}

TEST_CASE("plug-in variance matches direct evaluation", "[variance]") {
  Rng rng = make_rng(401, {});
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t K = 2 + uniform_index(rng, 4);
    const std::size_t k = 1 + uniform_index(rng, std::min<std::size_t>(2, K - 1));
    const std::size_t n = 2 + uniform_index(rng, 49);
    const auto d = testing::random_dataset(n, K, rng);
    const auto v = topk_project(d, k);
    const auto spec = PartitionSpec::make(K, k, 2 * K);
    CHECK(sigma1_hat_sq(bin_stats(v, spec), n) ==
          Approx(testing::sigma1_oracle(v, spec)).margin(1e-12));
  }
}

TEST_CASE("plug-in standard deviation floors at zero", "[variance]") {
  // Two cells with identical means and zero spread: the first two terms
  // cancel up to rounding and the covariance term is zero.
  TopKView v;
  v.n = 4;
  v.k = 1;
  v.num_classes = 2;
  v.z_top = {0.55, 0.55, 0.85, 0.85};
  v.y_top = {0, 0, 0, 0};
  v.u = {0.1, 0.1, 0.1, 0.1};
  const auto stats = bin_stats(v, PartitionSpec::make(2, 1, 10));
  const auto est = estimate_variances(stats, 4, 1.0 / 30.0);
  CHECK(est.sigma1_hat_sq <= 1e-18);
  CHECK(est.sigma1_hat >= 0.0);
  CHECK(est.sigma1_hat == std::sqrt(std::max(est.sigma1_hat_sq, 0.0)));
}

TEST_CASE("plug-in variance is consistent in Setting 3", "[variance][statistical]") {
  const double truth = true_sigma1_sq(3, 0.05);
  const auto spec = PartitionSpec::make(10, 2, 20);
  double prev = 1e300;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    std::vector<double> err;
    for (std::uint64_t r = 0; r < 40; ++r) {
      Rng rng = make_rng(402, {n, r});
      const auto v = topk_project(gen_setting3(n, 0.05, rng), 2);
      err.push_back(std::abs(sigma1_hat_sq(bin_stats(v, spec), n) / truth - 1.0));
    }
    std::sort(err.begin(), err.end());
    const double median = 0.5 * (err[19] + err[20]);
    CHECK(median < prev);
    prev = median;
  }
  CHECK(prev < 0.10);
}
