#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "calib/binning.hpp"
#include "calib/domain.hpp"
#include "calib/rng.hpp"

namespace calib {

/// Synthetic benchmark settings:
///   1: K = 2, Z_1 ~ Unif(0,1), P(Y_1 = 1 | Z) = h_beta(Z_1), top-1, mK = 50
///   2: as 1 with Z_1 ~ Beta(5, 1/2)
///   3: K = 10, Z ~ Unif(simplex), top class shifted by -beta and runner-up
///      by +beta, top-1-to-2, mK = 20
struct SettingConfig {
  int setting = 1;
  double beta = 1.0;
  std::size_t n = 1000;
  std::size_t cells_per_axis = 50;
  std::size_t depth = 1;
  std::size_t num_classes = 2;

  static SettingConfig defaults(int setting, double beta, std::size_t n = 1000);
  PartitionSpec partition() const {
    return PartitionSpec::make(num_classes, depth, cells_per_axis);
  }
};

/// z^beta / (z^beta + (1 - z)^beta), i.e. a logistic link on logit(z) scaled by beta.
double link_h(double beta, double z) noexcept;

Dataset gen_setting1(std::size_t n, double beta, Rng& rng);
Dataset gen_setting2(std::size_t n, double beta, Rng& rng);
Dataset gen_setting3(std::size_t n, double beta, Rng& rng);
Dataset generate(const SettingConfig& cfg, Rng& rng);

/// Population ECE^2 of a setting (adaptive Gauss-Kronrod for 1 and 2,
/// 2 beta^2 for 3). Throws QuadratureNotConverged.
double true_ece_sq(int setting, double beta);

/// Population variance Var(||m||^2) + 4 E[m^T Cov(U|Z) m] of a setting,
/// m = E[U | Z_(1:k)].
double true_sigma1_sq(int setting, double beta);

/// The published beta grids: {0, 0.05, ..., 1} for 1-2, {0, 0.005, ..., 0.1} for 3.
std::vector<double> default_beta_grid(int setting);

/// Exact binomial interval at confidence `conf`.
std::pair<double, double> clopper_pearson(std::size_t successes, std::size_t trials,
                                          double conf = 0.95);

struct Proportion {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double fraction = 0.0;
  double lower = 0.0;
  double upper = 1.0;

  static Proportion of(std::size_t successes, std::size_t trials, double conf = 0.95);
};

enum class Method { adjusted, bootstrap, subsampling, hulc, tcal };

std::string_view to_string(Method m) noexcept;
std::optional<Method> parse_method(std::string_view name) noexcept;

struct ExperimentConfig {
  int setting = 1;
  std::vector<double> betas;
  std::size_t n = 1000;
  std::size_t cells_per_axis = 0;  // 0: setting default
  std::vector<Method> methods{Method::adjusted};
  std::size_t reps = 1000;
  double alpha = 0.1;
  std::uint64_t seed = 1;
  std::size_t boot_reps = 1000;
  std::size_t subsample_reps = 1000;
  std::size_t subsample_size = 0;  // 0: floor(sqrt(n))
  double subsample_rate = 0.5;
  std::size_t tcal_reps = 1000;
  double hulc_delta = 0.0;
  /// Keep per-replication outcomes in the result.
  bool keep_records = false;
};

struct MethodOutcome {
  bool covered = false;
  double width = 0.0;
  bool reject = false;
};

struct ReplicationRecord {
  double t = 0.0;
  double t_tcal = 0.0;  // 1/N-weighted statistic on the same partition as t
  double sigma1_hat_sq = 0.0;
  std::vector<MethodOutcome> outcomes;  // parallel to config.methods
};

struct MethodRow {
  Method method = Method::adjusted;
  double beta = 0.0;
  double true_ece_sq = 0.0;
  std::size_t reps = 0;
  std::optional<Proportion> coverage;  // absent for T-Cal
  std::optional<double> mean_width;
  std::optional<double> width_p5;
  std::optional<double> width_p95;
  Proportion power;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<MethodRow> rows;  // beta-major, then config.methods order
  std::vector<std::vector<ReplicationRecord>> records;  // [beta][rep] when kept
  double seconds = 0.0;
};

/// Generates `reps` datasets per beta, builds every method's interval (or
/// test), and aggregates coverage of the true ECE^2, widths and rejection
/// of ECE^2 = 0. Results depend only on the config, not on thread count.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Coverage and power come from the same replications.
inline ExperimentResult run_coverage(const ExperimentConfig& cfg) { return run_experiment(cfg); }
inline ExperimentResult run_power(const ExperimentConfig& cfg) { return run_experiment(cfg); }

/// One row per (beta, method).
std::string experiment_csv(const ExperimentResult& result);
/// JSON document with the config echo and the rows (no timings).
std::string experiment_json(const ExperimentResult& result);

}  // namespace calib
