#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <numeric>

#include "calib/error.hpp"
#include "calib/estimator.hpp"
#include "calib/parallel.hpp"
#include "calib/simulate.hpp"
#include "calib/variance.hpp"
#include "support/oracles.hpp"

using namespace calib;
using Catch::Approx;

namespace {

// k = 1 view with every point in the same cell and the given residuals.
TopKView one_cell_view(const std::vector<double>& u) {
  TopKView v;
  v.n = u.size();
  v.k = 1;
  v.num_classes = 2;
  v.z_top.assign(u.size(), 0.55);
  v.y_top.assign(u.size(), 0);
  v.u = u;
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool same_table(const BinStatsTable& a, const BinStatsTable& b) {
  return a.codes == b.codes && a.counts == b.counts && same_bits(a.sum_u, b.sum_u) &&
         same_bits(a.sum_usq, b.sum_usq) && same_bits(a.sum_outer, b.sum_outer);
}

}  // namespace

TEST_CASE("per-cell statistics on small fixtures", "[estimator]") {
  const auto spec = PartitionSpec::make(2, 1, 50);
  const auto same = bin_stats(one_cell_view({0.5, 0.5}), spec);
  REQUIRE(same.size() == 1);
  CHECK(same.counts[0] == 2);
  CHECK(same.sum_u[0] == 1.0);
  CHECK(same.sum_usq[0] == 0.5);
  CHECK(same.mean_u(0)[0] == 0.5);
  CHECK(same.cov_u(0)[0] == 0.0);

  const auto pair = bin_stats(one_cell_view({1.0, -1.0}), spec);
  CHECK(pair.mean_u(0)[0] == 0.0);
  CHECK(pair.cov_u(0)[0] == 1.0);
}

TEST_CASE("estimator values on small fixtures", "[estimator]") {
  const auto spec = PartitionSpec::make(2, 1, 50);
  const auto stats = bin_stats(one_cell_view({0.5, 0.5}), spec);
  CHECK(debiased_ece(stats, 2).t == Approx(0.25).epsilon(1e-15));
  CHECK(tcal_statistic(stats, 2) == Approx(0.125).epsilon(1e-15));

  // Singleton cells only.
  const auto d = validate_dataset({{0.55, 0.45}, {0.75, 0.25}, {0.95, 0.05}}, {0, 1, 0});
  const auto single = bin_stats(topk_project(d, 1), spec);
  CHECK(debiased_ece(single, 3).t == 0.0);
  CHECK(tcal_statistic(single, 3) == 0.0);

  CHECK_THROWS_AS(debiased_ece(stats, 3), CalibError);
}

TEST_CASE("negative estimates keep t and clamp t_plus", "[estimator]") {
  const auto spec = PartitionSpec::make(2, 1, 50);
  const auto e = debiased_ece(bin_stats(one_cell_view({0.3, -0.3}), spec), 2);
  CHECK(e.t < 0.0);
  CHECK(e.t_plus == 0.0);
}

TEST_CASE("six-point fixture matches direct summation", "[estimator]") {
  const auto d = validate_dataset({{0.50, 0.30, 0.20},
                                   {0.52, 0.31, 0.17},
                                   {0.45, 0.35, 0.20},
                                   {0.70, 0.20, 0.10},
                                   {0.71, 0.21, 0.08},
                                   {0.40, 0.35, 0.25}},
                                  {0, 1, 2, 0, 1, 0});
  const auto v = topk_project(d, 2);
  const auto spec = PartitionSpec::make(3, 2, 6);
  const auto stats = bin_stats(v, spec);
  CHECK(stats.total_count() == 6);
  for (std::size_t b = 0; b < stats.size(); ++b) {
    std::vector<double> su(2, 0.0), outer(4, 0.0);
    double usq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      if (bin_code(v.z_row(i), spec) != stats.codes[b]) continue;
      ++count;
      const auto u = v.u_row(i);
      for (std::size_t r = 0; r < 2; ++r) {
        su[r] += u[r];
        for (std::size_t s = 0; s < 2; ++s) outer[r * 2 + s] += u[r] * u[s];
      }
      usq += u[0] * u[0] + u[1] * u[1];
    }
    CHECK(stats.counts[b] == count);
    for (std::size_t r = 0; r < 2; ++r) CHECK(stats.sum_u[b * 2 + r] == Approx(su[r]).margin(1e-15));
    for (std::size_t r = 0; r < 4; ++r) {
      CHECK(stats.sum_outer[b * 4 + r] == Approx(outer[r]).margin(1e-15));
    }
    CHECK(stats.sum_usq[b] == Approx(usq).margin(1e-15));
  }
  CHECK(debiased_ece(stats, 6).t == Approx(testing::debiased_oracle(v, spec)).margin(1e-12));
}

TEST_CASE("ten-point fixture matches the pairwise T-Cal oracle", "[estimator]") {
  Rng rng = make_rng(301, {});
  const auto d = testing::random_dataset(10, 2, rng);
  const auto v = topk_project(d, 1);
  const auto spec = PartitionSpec::make(2, 1, 4);
  CHECK(tcal_statistic(bin_stats(v, spec), 10) ==
        Approx(testing::tcal_oracle(v, spec)).margin(1e-12));
}

TEST_CASE("parallel and serial cell statistics are bitwise identical", "[estimator][parallel]") {
  Rng rng = make_rng(302, {});
  for (std::size_t n : {17u, 5000u, 40000u}) {
    const auto d = testing::random_dataset(n, 5, rng);
    for (std::size_t k : {1u, 2u, 3u}) {
      const auto v = topk_project(d, k);
      const auto spec = PartitionSpec::make(5, k, 15);
      const auto serial = bin_stats_serial(v, spec);
      for (int threads : {1, 2, 4, 8}) {
        set_threads(threads);
        CHECK(same_table(bin_stats(v, spec), serial));
      }
    }
  }
  set_threads(max_threads());
}

TEST_CASE("fast resampling kernel matches a materialised subset", "[estimator]") {
  Rng rng = make_rng(303, {});
  const auto d = testing::random_dataset(300, 4, rng);
  const auto spec = PartitionSpec::make(4, 2, 8);
  const auto v = topk_project(d, 2);
  const BinnedResiduals binned(v, spec);
  auto ws = binned.make_workspace();
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::size_t> idx(150);
    for (auto& i : idx) i = uniform_index(rng, 300);
    std::sort(idx.begin(), idx.end());
    const auto sub = topk_project(d.subset(idx), 2);
    const auto stats = bin_stats(sub, spec);
    CHECK(binned.debiased(idx, ws) == debiased_ece(stats, 150).t);
    CHECK(binned.tcal(idx, ws) == tcal_statistic(stats, 150));
  }
}

TEST_CASE("T is a deterministic function of the data", "[estimator]") {
  Rng rng = make_rng(304, {});
  const auto d = testing::random_dataset(2000, 3, rng);
  const auto spec = PartitionSpec::make(3, 2, 12);
  const double a = debiased_ece(bin_stats(topk_project(d, 2), spec), 2000).t;
  const double b = debiased_ece(bin_stats(topk_project(d, 2), spec), 2000).t;
  CHECK(a == b);
}

TEST_CASE("doubling by duplication agrees with the pairwise oracle", "[estimator]") {
  Rng rng = make_rng(305, {});
  const auto d = testing::random_dataset(40, 3, rng);
  std::vector<std::size_t> twice(80);
  for (std::size_t i = 0; i < 80; ++i) twice[i] = i % 40;
  const auto v = topk_project(d.subset(twice), 2);
  const auto spec = PartitionSpec::make(3, 2, 6);
  CHECK(debiased_ece(bin_stats(v, spec), 80).t ==
        Approx(testing::debiased_oracle(v, spec)).margin(1e-12));
}

TEST_CASE("T is unbiased for calibrated labels", "[estimator][statistical]") {
  // Labels drawn from the predicted probabilities: E[T] = 0 exactly.
  const auto spec = PartitionSpec::make(4, 2, 12);
  std::vector<double> t(10000);
  for (std::size_t r = 0; r < t.size(); ++r) {
    Rng rng = make_rng(306, {r});
    const auto d = testing::random_dataset(200, 4, rng, true);
    t[r] = debiased_ece(bin_stats(topk_project(d, 2), spec), 200).t;
  }
  const auto ms = testing::mean_se(t);
  CHECK(std::abs(ms.mean) < 4.0 * ms.se);
}
