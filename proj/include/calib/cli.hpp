#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "calib/domain.hpp"
#include "calib/simulate.hpp"
#include "json.hpp"

namespace calib::cli {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Prediction logs
//
// Header `z_1,...,z_K,label` (0-based class index) or `z_1,...,z_K,y_1,...,y_K`
// (one-hot). Comma separated, '.' decimal point, scientific notation allowed.
// ---------------------------------------------------------------------------

Dataset parse_predictions_text(std::string_view text);
Dataset parse_predictions_csv(const std::string& path);
std::string predictions_csv(const Dataset& data, bool one_hot = false);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);
std::string sha256_hex(std::string_view bytes);

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct ReportConfig {
  std::size_t num_classes = 0;
  std::size_t k = 1;
  std::size_t mk = 50;
  double m = 25.0;
  std::string mk_source = "default";  // "flag", "default" or "rule"
  double alpha = 0.1;
  std::uint64_t seed = 0;
  std::string method = "adjusted";
  std::size_t boot_reps = 1000;
  std::string bootstrap_variant = "percentile";
  std::size_t subsample_size = 0;
  double subsample_rate = 0.5;
  std::size_t subsample_reps = 1000;
  std::size_t tcal_reps = 1000;
  double hulc_delta = 0.0;

  friend bool operator==(const ReportConfig&, const ReportConfig&) = default;
};

struct ReportInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool includes_zero = false;
  bool excludes_zero_point = false;
  bool degenerate_variance = false;
  std::string case_tag;

  friend bool operator==(const ReportInterval&, const ReportInterval&) = default;
};

struct ReportBaseline {
  std::string method;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t replications = 0;

  friend bool operator==(const ReportBaseline&, const ReportBaseline&) = default;
};

struct ReportTcal {
  double statistic = 0.0;
  double threshold = 0.0;
  bool reject = false;
  std::size_t replications = 0;

  friend bool operator==(const ReportTcal&, const ReportTcal&) = default;
};

struct ReportDocument {
  int schema_version = kSchemaVersion;
  std::string tool_version{kToolVersion};
  std::string input_digest;
  ReportConfig config;
  std::size_t n = 0;
  double t = 0.0;
  double t_plus = 0.0;
  double sigma0_sq = 0.0;
  double sigma1_hat_sq = 0.0;
  double sigma1_hat = 0.0;
  ReportInterval ci_squared;
  double root_lower = 0.0;
  double root_upper = 0.0;
  double zero_threshold = 0.0;
  double p_value_calibrated = 0.5;
  bool reject_at_alpha = false;
  std::optional<ReportBaseline> baseline;
  std::optional<ReportTcal> tcal;
  std::vector<std::string> warnings;

  friend bool operator==(const ReportDocument&, const ReportDocument&) = default;
};

nlohmann::json to_json(const ReportDocument& doc);
ReportDocument report_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Experiment configs: a flat TOML subset (key = value, arrays on one line,
// '#' comments) or JSON with the same keys.
// ---------------------------------------------------------------------------

nlohmann::json parse_toml_subset(std::string_view text);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

// ---------------------------------------------------------------------------
// Entry point. Exit codes: 0 success, 2 usage or validation, 3 numerical failure.
// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace calib::cli
