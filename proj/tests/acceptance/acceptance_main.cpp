// Acceptance criteria A1-A9. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Pass criterion names (e.g. A3 A7) to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "calib/cli.hpp"
#include "calib/estimator.hpp"
#include "calib/parallel.hpp"
#include "calib/simulate.hpp"
#include "calib/variance.hpp"
#include "support/oracles.hpp"

using namespace calib;

namespace {

constexpr std::uint64_t kSeed = 20240601;
constexpr std::size_t kReps = 1000;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> probe_betas(int setting) {
  const auto g = default_beta_grid(setting);
  return {g.front(), g[g.size() / 2], g.back()};
}

double calibrated_beta(int setting) { return setting == 3 ? 0.0 : 1.0; }

// Shared coverage/power/width runs, one per setting, computed on first use.
const ExperimentResult& grid_run(int setting) {
  static std::map<int, ExperimentResult> cache;
  auto it = cache.find(setting);
  if (it != cache.end()) return it->second;
  ExperimentConfig cfg;
  cfg.setting = setting;
  cfg.betas = probe_betas(setting);
  cfg.n = 1000;
  cfg.reps = kReps;
  cfg.seed = kSeed;
  cfg.methods = {Method::adjusted, Method::subsampling, Method::hulc};
  if (setting != 3) cfg.methods.push_back(Method::tcal);
  cfg.keep_records = true;
  return cache.emplace(setting, run_experiment(cfg)).first->second;
}

const MethodRow& row_of(const ExperimentResult& r, Method m, double beta) {
  for (const auto& row : r.rows) {
    if (row.method == m && std::abs(row.beta - beta) < 1e-12) return row;
  }
  throw std::logic_error("missing row");
}

std::size_t method_index(const ExperimentResult& r, Method m) {
  const auto& ms = r.config.methods;
  return static_cast<std::size_t>(std::find(ms.begin(), ms.end(), m) - ms.begin());
}

Verdict a1_coverage() {
  const auto band = Proportion::of(900, kReps);
  Verdict v{true, fmt("band [%.4f, %.4f];", band.lower, band.upper)};
  for (int s = 1; s <= 3; ++s) {
    for (double beta : probe_betas(s)) {
      const double cov = row_of(grid_run(s), Method::adjusted, beta).coverage->fraction;
      const bool ok = cov >= band.lower && cov <= band.upper;
      v.pass = v.pass && ok;
      v.detail += fmt(" S%d b=%g %.3f%s", s, beta, cov, ok ? "" : "*");
    }
  }
  return v;
}

Verdict a2_power() {
  const auto band = Proportion::of(100, kReps);
  Verdict v{true, fmt("size band [%.4f, %.4f];", band.lower, band.upper)};
  for (int s = 1; s <= 3; ++s) {
    const double size = row_of(grid_run(s), Method::adjusted, calibrated_beta(s)).power.fraction;
    const bool ok = size >= band.lower && size <= band.upper;
    v.pass = v.pass && ok;
    v.detail += fmt(" size S%d %.3f%s", s, size, ok ? "" : "*");
  }
  const double power = row_of(grid_run(3), Method::adjusted, 0.1).power.fraction;
  v.pass = v.pass && power >= 0.95;
  v.detail += fmt("; power S3 b=0.1 %.3f%s; T-Cal agreement", power, power >= 0.95 ? "" : "*");
  for (int s = 1; s <= 2; ++s) {
    const auto& r = grid_run(s);
    const auto ia = method_index(r, Method::adjusted), it = method_index(r, Method::tcal);
    for (std::size_t b = 0; b < r.records.size(); ++b) {
      std::size_t agree = 0;
      for (const auto& rec : r.records[b]) {
        agree += rec.outcomes[ia].reject == rec.outcomes[it].reject ? 1 : 0;
      }
      const double frac = double(agree) / double(r.records[b].size());
      v.pass = v.pass && frac >= 0.95;
      v.detail += fmt(" S%d b=%g %.3f%s", s, r.config.betas[b], frac, frac >= 0.95 ? "" : "*");
    }
  }
  return v;
}

Verdict a3_null_variance() {
  ExperimentConfig cfg;
  cfg.setting = 1;
  cfg.betas = {1.0};
  cfg.cells_per_axis = 50;
  cfg.reps = 5000;
  cfg.seed = kSeed;
  cfg.keep_records = true;
  const auto r = run_experiment(cfg);
  const double sigma0 = std::sqrt(sigma0_sq(2, 1));
  const double scale = 1000.0 * std::sqrt(PartitionSpec::make(2, 1, 50).volume());
  std::vector<double> scaled, z;
  for (const auto& rec : r.records[0]) {
    scaled.push_back(scale * rec.t);
    z.push_back(scale * rec.t / sigma0);
  }
  const double var = testing::mean_se(scaled).var;
  const double rel = std::abs(var / (sigma0 * sigma0) - 1.0);
  const double p = testing::ks_normal_pvalue(z);
  return {rel < 0.10 && p > 0.01,
          fmt("var %.5f vs %.5f (rel %.3f%s); KS p %.4g%s", var, sigma0 * sigma0, rel,
              rel < 0.10 ? "" : "*", p, p > 0.01 ? "" : "*")};
}

Verdict a4_sigma1_consistency() {
  const double truth = true_sigma1_sq(3, 0.05);
  const auto spec = PartitionSpec::make(10, 2, 20);
  constexpr std::size_t reps = 200;
  Verdict v{true, fmt("sigma1^2 %.6f; median rel err", truth)};
  double prev = 1e300;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    std::vector<double> err(reps);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t r = 0; r < std::ptrdiff_t(reps); ++r) {
      Rng rng = make_rng(kSeed, {4, n, std::uint64_t(r)});
      const auto view = topk_project(gen_setting3(n, 0.05, rng), 2);
      err[std::size_t(r)] = std::abs(sigma1_hat_sq(bin_stats(view, spec), n) / truth - 1.0);
    }
    std::sort(err.begin(), err.end());
    const double median = 0.5 * (err[reps / 2 - 1] + err[reps / 2]);
    v.pass = v.pass && median < prev;
    prev = median;
    v.detail += fmt(" n=%zu %.4f", n, median);
  }
  v.pass = v.pass && prev < 0.10;
  return v;
}

Verdict a5_bootstrap() {
  ExperimentConfig cfg;
  cfg.setting = 1;
  cfg.betas = {1.0};
  cfg.reps = kReps;
  cfg.seed = kSeed;
  cfg.methods = {Method::bootstrap};
  cfg.boot_reps = 1000;
  const double cov = run_experiment(cfg).rows[0].coverage->fraction;
  return {cov < 0.88, fmt("bootstrap coverage of ECE^2 = 0: %.3f (must be < 0.88)", cov)};
}

Verdict a6_widths() {
  Verdict v{true, "width ratio subsampling/adjusted, HulC/adjusted:"};
  for (int s = 1; s <= 3; ++s) {
    for (double beta : probe_betas(s)) {
      const auto& r = grid_run(s);
      const double adj = *row_of(r, Method::adjusted, beta).mean_width;
      const double sub = *row_of(r, Method::subsampling, beta).mean_width / adj;
      const double hulc = *row_of(r, Method::hulc, beta).mean_width / adj;
      const double floor = beta == calibrated_beta(s) ? 1.5 : 1.0;
      const bool ok = beta == calibrated_beta(s) ? sub > floor && hulc > floor
                                                 : sub >= floor && hulc >= floor;
      v.pass = v.pass && ok;
      v.detail += fmt(" S%d b=%g %.2f,%.2f%s", s, beta, sub, hulc, ok ? "" : "*");
    }
  }
  return v;
}

Verdict a7_oracles() {
  Rng rng = make_rng(kSeed, {7});
  double worst_t = 0.0, worst_tcal = 0.0, worst_s1 = 0.0;
  for (int fixtures = 0; fixtures < 100;) {
    const std::size_t K = 2 + uniform_index(rng, 4);
    const std::size_t k = 1 + uniform_index(rng, 2);
    const std::size_t n = 2 + uniform_index(rng, 49);
    const std::size_t mk = K + uniform_index(rng, 4 * K);
    if (k == K && K > 2) continue;
    ++fixtures;
    const auto data = testing::random_dataset(n, K, rng);
    const auto view = topk_project(data, k);
    const auto spec = PartitionSpec::make(K, k, mk);
    const auto stats = bin_stats(view, spec);
    worst_t = std::max(worst_t,
                       std::abs(debiased_ece(stats, n).t - testing::debiased_oracle(view, spec)));
    worst_tcal =
        std::max(worst_tcal, std::abs(tcal_statistic(stats, n) - testing::tcal_oracle(view, spec)));
    worst_s1 =
        std::max(worst_s1, std::abs(sigma1_hat_sq(stats, n) - testing::sigma1_oracle(view, spec)));
  }
  const bool ok = worst_t <= 1e-12 && worst_tcal <= 1e-12 && worst_s1 <= 1e-12;
  return {ok, fmt("max abs diff T %.2e, T-Cal %.2e, sigma1^2 %.2e", worst_t, worst_tcal, worst_s1)};
}

Verdict a8_bias() {
  ExperimentConfig cfg;
  cfg.setting = 1;
  cfg.betas = {0.5};
  cfg.n = 200;
  cfg.reps = 10000;
  cfg.seed = kSeed;
  cfg.keep_records = true;
  const auto r = run_experiment(cfg);
  const double truth = r.rows[0].true_ece_sq;
  std::vector<double> t, tcal;
  for (const auto& rec : r.records[0]) {
    t.push_back(rec.t);
    tcal.push_back(rec.t_tcal);
  }
  const auto a = testing::mean_se(t), b = testing::mean_se(tcal);
  const double bias_t = a.mean - truth, bias_tcal = b.mean - truth;
  const bool ok = std::abs(bias_t) + 4.0 * a.se < std::abs(bias_tcal) - 4.0 * b.se;
  return {ok, fmt("bias T %.3e (SE %.1e), bias T-Cal %.3e (SE %.1e)", bias_t, a.se, bias_tcal, b.se)};
}

Verdict a9_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "calib_acceptance_a9";
  fs::remove_all(dir);
  fs::create_directories(dir);
  cli::write_file((dir / "grid.toml").string(),
                  "setting = 1\nbetas = [0.5, 1.0]\nmethods = [\"adjusted\", \"bootstrap\", "
                  "\"subsampling\", \"hulc\", \"tcal\"]\nreps = 40\nboot_reps = 200\n"
                  "subsample_reps = 200\ntcal_reps = 200\nseed = 99\n");
  std::vector<std::string> csv, json;
  for (int threads : {1, 4, 8}) {
    const std::string prefix = (dir / ("t" + std::to_string(threads))).string();
    std::ostringstream out, err;
    const int code = cli::run({"simulate", "--config", (dir / "grid.toml").string(), "--threads",
                               std::to_string(threads), "--out", prefix},
                              out, err);
    if (code != 0) return {false, "simulate failed: " + err.str()};
    csv.push_back(cli::read_file(prefix + ".csv"));
    json.push_back(cli::read_file(prefix + ".json"));
  }
  fs::remove_all(dir);
  set_threads(resolve_threads(std::nullopt));
  const bool ok = csv[0] == csv[1] && csv[0] == csv[2] && json[0] == json[1] && json[0] == json[2];
  return {ok, fmt("CSV %zu bytes, JSON %zu bytes, threads 1/4/8 %s", csv[0].size(), json[0].size(),
                  ok ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"A1", a1_coverage}, {"A2", a2_power}, {"A3", a3_null_variance},
      {"A4", a4_sigma1_consistency}, {"A5", a5_bootstrap}, {"A6", a6_widths},
      {"A7", a7_oracles}, {"A8", a8_bias}, {"A9", a9_determinism}};
  std::vector<std::string> only(argv + 1, argv + argc);
  set_threads(resolve_threads(std::nullopt));

  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s  %s  [%.1fs]\n", name.c_str(), v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
