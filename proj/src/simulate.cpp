#include "calib/simulate.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include "json.hpp"
#include <random>
#include <span>
#include <array>
#include <string>

#include "calib/baselines.hpp"
#include "calib/error.hpp"
#include "calib/estimator.hpp"
#include "calib/inference.hpp"
#include "calib/parallel.hpp"
#include "calib/quantile.hpp"
#include "calib/variance.hpp"

namespace calib {

namespace {

void check_setting_beta(int setting, double beta) {
  if (setting < 1 || setting > 3) {
    throw CalibError(ErrorCode::InvalidArgument, "setting must be 1, 2 or 3");
  }
  const double hi = setting == 3 ? 0.1 : 1.0;
  if (!(beta >= 0.0 && beta <= hi + 1e-12)) {
    throw CalibError(ErrorCode::InvalidArgument, "beta=" + std::to_string(beta) +
                                                     " outside [0, " + std::to_string(hi) + "]");
  }
}

Dataset binary_dataset(const std::vector<double>& z1, double beta, Rng& rng) {
  const std::size_t n = z1.size();
  std::vector<double> probs(2 * n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    probs[2 * i] = z1[i];
    probs[2 * i + 1] = 1.0 - z1[i];
    labels[i] = uniform01(rng) < link_h(beta, z1[i]) ? 0 : 1;
  }
  return Dataset::validate(2, std::move(probs), std::move(labels));
}

template <class F>
double integrate(F f, double a, double b) {
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12, &error);
  if (!std::isfinite(value) || error > 1e-9 * std::max(1.0, std::abs(value))) {
    throw CalibError(ErrorCode::QuadratureNotConverged,
                     "error estimate " + std::to_string(error));
  }
  return value;
}

// E[g(Z_1)] under the setting's law of Z_1; g must be symmetric under
// z -> 1 - z so that it also equals E[g(Z_(1))].
template <class G>
double expect_binary(int setting, G g) {
  if (setting == 1) return integrate(g, 0.0, 1.0);
  // Beta(5, 1/2): substitute z = 1 - s^2 to remove the (1 - z)^{-1/2} pole.
  const double norm = boost::math::beta(5.0, 0.5);
  return integrate(
      [&](double s) {
        const double z = 1.0 - s * s;
        const double z2 = z * z;
        return 2.0 * g(z) * z2 * z2 / norm;
      },
      0.0, 1.0);
}

}  // namespace

SettingConfig SettingConfig::defaults(int setting, double beta, std::size_t n) {
  check_setting_beta(setting, beta);
  SettingConfig cfg;
  cfg.setting = setting;
  cfg.beta = beta;
  cfg.n = n;
  if (setting == 3) {
    cfg.cells_per_axis = 20;
    cfg.depth = 2;
    cfg.num_classes = 10;
  }
  return cfg;
}

double link_h(double beta, double z) noexcept {
  const double a = std::pow(z, beta);
  const double b = std::pow(1.0 - z, beta);
  return a / (a + b);
}

Dataset gen_setting1(std::size_t n, double beta, Rng& rng) {
  check_setting_beta(1, beta);
  std::vector<double> z1(n);
  for (auto& z : z1) z = uniform01(rng);
  return binary_dataset(z1, beta, rng);
}

Dataset gen_setting2(std::size_t n, double beta, Rng& rng) {
  check_setting_beta(2, beta);
  std::gamma_distribution<double> shape_a(5.0, 1.0);
  std::gamma_distribution<double> shape_b(0.5, 1.0);
  std::vector<double> z1(n);
  for (auto& z : z1) {
    do {
      const double x = shape_a(rng);
      const double y = shape_b(rng);
      z = x / (x + y);
    } while (!(z > 0.0 && z < 1.0));
  }
  return binary_dataset(z1, beta, rng);
}

Dataset gen_setting3(std::size_t n, double beta, Rng& rng) {
  check_setting_beta(3, beta);
  constexpr std::size_t K = 10;
  std::vector<double> probs(n * K);
  std::vector<int> labels(n);
  std::array<std::size_t, K> order{};
  std::array<double, K> q{};
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> z(probs.data() + i * K, K);
    double total = 0.0;
    for (auto& v : z) {
      v = -std::log1p(-uniform01(rng));
      total += v;
    }
    for (auto& v : z) v /= total;
    rank_classes(z, 2, order);
    std::copy(z.begin(), z.end(), q.begin());
    q[order[0]] -= beta;
    q[order[1]] += beta;
    const double draw = uniform01(rng);
    double cumulative = 0.0;
    int label = static_cast<int>(K) - 1;
    for (std::size_t c = 0; c < K; ++c) {
      cumulative += q[c];
      if (draw < cumulative) {
        label = static_cast<int>(c);
        break;
      }
    }
    labels[i] = label;
  }
  return Dataset::validate(K, std::move(probs), std::move(labels));
}

Dataset generate(const SettingConfig& cfg, Rng& rng) {
  switch (cfg.setting) {
    case 1: return gen_setting1(cfg.n, cfg.beta, rng);
    case 2: return gen_setting2(cfg.n, cfg.beta, rng);
    case 3: return gen_setting3(cfg.n, cfg.beta, rng);
    default: throw CalibError(ErrorCode::InvalidArgument, "setting must be 1, 2 or 3");
  }
}

double true_ece_sq(int setting, double beta) {
  check_setting_beta(setting, beta);
  if (setting == 3) return 2.0 * beta * beta;
  return expect_binary(setting, [beta](double z) {
    const double m = link_h(beta, z) - z;
    return m * m;
  });
}

double true_sigma1_sq(int setting, double beta) {
  check_setting_beta(setting, beta);
  if (setting == 3) {
    // Sorted uniform-simplex coordinates are Z_(j) = sum_{i>=j} D_i / i with
    // D ~ Dirichlet(1, ..., 1), which gives the moments below in closed form.
    constexpr double K = 10.0;
    double harmonic_tail = 0.0;
    for (int i = 2; i <= 10; ++i) harmonic_tail += 1.0 / i;
    const double mean_top2_sum = (1.0 + 2.0 * harmonic_tail) / K;
    const double mean_gap = 1.0 / K;
    const double mean_gap_sq = 2.0 / (K * (K + 1.0));
    const double b2 = beta * beta;
    return 4.0 * b2 * (mean_top2_sum - mean_gap_sq + 4.0 * beta * mean_gap - 4.0 * b2);
  }
  const auto m2 = [beta](double z) {
    const double m = link_h(beta, z) - z;
    return m * m;
  };
  const double second = expect_binary(setting, m2);
  const double fourth = expect_binary(setting, [&](double z) { return m2(z) * m2(z); });
  const double cross = expect_binary(setting, [&](double z) {
    const double h = link_h(beta, z);
    return m2(z) * h * (1.0 - h);
  });
  return fourth - second * second + 4.0 * cross;
}

std::vector<double> default_beta_grid(int setting) {
  std::vector<double> grid;
  const double step = setting == 3 ? 0.005 : 0.05;
  for (int i = 0; i <= 20; ++i) grid.push_back(step * i);
  return grid;
}

std::pair<double, double> clopper_pearson(std::size_t successes, std::size_t trials, double conf) {
  if (trials < 1 || successes > trials) {
    throw CalibError(ErrorCode::InvalidCounts, std::to_string(successes) + " of " +
                                                   std::to_string(trials));
  }
  if (!(conf > 0.0 && conf < 1.0)) throw CalibError(ErrorCode::InvalidLevel, "confidence");
  const double tail = (1.0 - conf) / 2.0;
  const auto s = static_cast<double>(successes);
  const auto t = static_cast<double>(trials);
  const double lower = successes == 0 ? 0.0 : boost::math::ibeta_inv(s, t - s + 1.0, tail);
  const double upper = successes == trials ? 1.0 : boost::math::ibeta_inv(s + 1.0, t - s, 1.0 - tail);
  return {lower, upper};
}

Proportion Proportion::of(std::size_t successes, std::size_t trials, double conf) {
  const auto [lo, hi] = clopper_pearson(successes, trials, conf);
  return {successes, trials, static_cast<double>(successes) / static_cast<double>(trials), lo, hi};
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::adjusted: return "adjusted";
    case Method::bootstrap: return "bootstrap";
    case Method::subsampling: return "subsampling";
    case Method::hulc: return "hulc";
    case Method::tcal: return "tcal";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) noexcept {
  for (Method m : {Method::adjusted, Method::bootstrap, Method::subsampling, Method::hulc,
                   Method::tcal}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

namespace {

struct RunContext {
  SettingConfig setting;
  PartitionSpec spec;
  std::optional<PartitionSpec> tcal_spec;
  double sigma0_sq = 0.0;
};

ReplicationRecord run_replication(const ExperimentConfig& cfg, const RunContext& ctx,
                                  std::size_t beta_index, std::size_t rep, double truth) {
  const auto setting = static_cast<std::uint64_t>(cfg.setting);
  Rng rng = make_rng(cfg.seed, {setting, beta_index, rep, 0});
  const Dataset data = generate(ctx.setting, rng);
  const TopKView view = topk_project(data, ctx.setting.depth);
  const EstimateReport report = analyze(view, ctx.spec, cfg.alpha, ctx.sigma0_sq);

  ReplicationRecord rec;
  rec.t = report.estimate.t;
  rec.sigma1_hat_sq = report.variances.sigma1_hat_sq;
  rec.t_tcal = tcal_statistic(bin_stats(view, ctx.spec), view.n);
  rec.outcomes.reserve(cfg.methods.size());

  std::optional<BinnedResiduals> binned;
  auto sample = [&]() -> const BinnedResiduals& {
    if (!binned) binned.emplace(view, ctx.spec);
    return *binned;
  };

  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const std::uint64_t method_seed = derive_seed(cfg.seed, {setting, beta_index, rep, 1 + mi});
    MethodOutcome out;
    ResampleConfig rc;
    rc.alpha = cfg.alpha;
    rc.seed = method_seed;
    switch (cfg.methods[mi]) {
      case Method::adjusted: {
        const auto& ci = report.ci_squared;
        out = {ci.contains(truth), ci.width(), !ci.contains(0.0)};
        break;
      }
      case Method::bootstrap: {
        rc.replications = cfg.boot_reps;
        const auto ci = bootstrap_ci(sample(), rc);
        out = {ci.contains(truth), ci.width(), !ci.contains(0.0)};
        break;
      }
      case Method::subsampling: {
        rc.method = ResampleMethod::subsampling;
        rc.replications = cfg.subsample_reps;
        rc.subsample_size = cfg.subsample_size;
        rc.rate_exponent = cfg.subsample_rate;
        const auto ci = subsampling_ci(sample(), rec.t, rc);
        out = {ci.contains(truth), ci.width(), !ci.contains(0.0)};
        break;
      }
      case Method::hulc: {
        const auto ci = hulc_ci(sample(), cfg.alpha, method_seed, cfg.hulc_delta);
        out = {ci.contains(truth), ci.width(), !ci.contains(0.0)};
        break;
      }
      case Method::tcal: {
        const PartitionSpec& tspec = *ctx.tcal_spec;
        const TopKView tview =
            tspec.depth() == view.k ? view : topk_project(data, tspec.depth());
        const double stat = tcal_statistic(bin_stats(tview, tspec), tview.n);
        const double threshold = tcal_threshold(tview, tspec, cfg.alpha, cfg.tcal_reps, method_seed);
        out = {false, 0.0, stat > threshold};
        break;
      }
    }
    rec.outcomes.push_back(out);
  }
  return rec;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

nlohmann::json proportion_json(const Proportion& p) {
  return {{"successes", p.successes}, {"trials", p.trials}, {"fraction", p.fraction},
          {"cp_lower", p.lower},      {"cp_upper", p.upper}};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.reps < 1) throw CalibError(ErrorCode::InvalidArgument, "reps must be >= 1");
  if (cfg.betas.empty()) throw CalibError(ErrorCode::InvalidArgument, "empty beta grid");
  if (cfg.methods.empty()) throw CalibError(ErrorCode::InvalidArgument, "no methods");
  const auto start = std::chrono::steady_clock::now();

  ExperimentResult result;
  result.config = cfg;

  RunContext ctx;
  ctx.setting = SettingConfig::defaults(cfg.setting, cfg.betas.front(), cfg.n);
  if (cfg.cells_per_axis != 0) ctx.setting.cells_per_axis = cfg.cells_per_axis;
  ctx.spec = ctx.setting.partition();
  ctx.sigma0_sq = sigma0_sq(ctx.setting.num_classes, ctx.setting.depth);
  if (std::find(cfg.methods.begin(), cfg.methods.end(), Method::tcal) != cfg.methods.end()) {
    // Binary settings are tested for full calibration (k = K = 2).
    const std::size_t tdepth = ctx.setting.num_classes == 2 ? 2 : ctx.setting.depth;
    ctx.tcal_spec = PartitionSpec::make(ctx.setting.num_classes, tdepth, ctx.setting.cells_per_axis);
  }

  for (std::size_t bi = 0; bi < cfg.betas.size(); ++bi) {
    const double beta = cfg.betas[bi];
    ctx.setting = SettingConfig::defaults(cfg.setting, beta, cfg.n);
    if (cfg.cells_per_axis != 0) ctx.setting.cells_per_axis = cfg.cells_per_axis;
    const double truth = true_ece_sq(cfg.setting, beta);

    std::vector<ReplicationRecord> records(cfg.reps);
    ExceptionCollector errors;
    const auto total = static_cast<std::ptrdiff_t>(cfg.reps);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t r = 0; r < total; ++r) {
      errors.run([&] {
        const auto rep = static_cast<std::size_t>(r);
        records[rep] = run_replication(cfg, ctx, bi, rep, truth);
      });
    }
    errors.rethrow();

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      MethodRow row;
      row.method = cfg.methods[mi];
      row.beta = beta;
      row.true_ece_sq = truth;
      row.reps = cfg.reps;
      std::size_t covered = 0;
      std::size_t rejected = 0;
      std::vector<double> widths;
      widths.reserve(cfg.reps);
      for (const auto& rec : records) {
        const auto& o = rec.outcomes[mi];
        covered += o.covered ? 1 : 0;
        rejected += o.reject ? 1 : 0;
        widths.push_back(o.width);
      }
      row.power = Proportion::of(rejected, cfg.reps);
      if (row.method != Method::tcal) {
        row.coverage = Proportion::of(covered, cfg.reps);
        double sum = 0.0;
        for (double w : widths) sum += w;
        row.mean_width = sum / static_cast<double>(cfg.reps);
        std::sort(widths.begin(), widths.end());
        row.width_p5 = quantile_sorted(widths, 0.05);
        row.width_p95 = quantile_sorted(widths, 0.95);
      }
      result.rows.push_back(row);
    }
    if (cfg.keep_records) result.records.push_back(std::move(records));
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string experiment_csv(const ExperimentResult& result) {
  std::string out =
      "setting,method,beta,true_ece_sq,reps,covered,coverage,coverage_cp_lower,coverage_cp_upper,"
      "mean_width,width_p5,width_p95,rejections,power,power_cp_lower,power_cp_upper\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const auto& row : result.rows) {
    out += std::to_string(result.config.setting) + ',' + std::string(to_string(row.method)) + ',' +
           format_number(row.beta) + ',' + format_number(row.true_ece_sq) + ',' +
           std::to_string(row.reps) + ',';
    if (row.coverage) {
      out += std::to_string(row.coverage->successes) + ',' + format_number(row.coverage->fraction) +
             ',' + format_number(row.coverage->lower) + ',' + format_number(row.coverage->upper);
    } else {
      out += ",,,";
    }
    out += ',' + opt(row.mean_width) + ',' + opt(row.width_p5) + ',' + opt(row.width_p95) + ',' +
           std::to_string(row.power.successes) + ',' + format_number(row.power.fraction) + ',' +
           format_number(row.power.lower) + ',' + format_number(row.power.upper) + '\n';
  }
  return out;
}

std::string experiment_json(const ExperimentResult& result) {
  const auto& c = result.config;
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : c.methods) methods.push_back(std::string(to_string(m)));
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["config"] = {{"setting", c.setting},
                   {"betas", c.betas},
                   {"n", c.n},
                   {"mk", c.cells_per_axis},
                   {"methods", methods},
                   {"reps", c.reps},
                   {"alpha", c.alpha},
                   {"seed", c.seed},
                   {"boot_reps", c.boot_reps},
                   {"bootstrap_variant", "percentile"},
                   {"subsample_reps", c.subsample_reps},
                   {"subsample_size", c.subsample_size},
                   {"subsample_rate", c.subsample_rate},
                   {"tcal_reps", c.tcal_reps},
                   {"hulc_delta", c.hulc_delta}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : result.rows) {
    nlohmann::json r = {{"method", std::string(to_string(row.method))},
                        {"beta", row.beta},
                        {"true_ece_sq", row.true_ece_sq},
                        {"reps", row.reps},
                        {"power", proportion_json(row.power)}};
    r["coverage"] = row.coverage ? proportion_json(*row.coverage) : nlohmann::json(nullptr);
    r["mean_width"] = row.mean_width ? nlohmann::json(*row.mean_width) : nlohmann::json(nullptr);
    r["width_p5"] = row.width_p5 ? nlohmann::json(*row.width_p5) : nlohmann::json(nullptr);
    r["width_p95"] = row.width_p95 ? nlohmann::json(*row.width_p95) : nlohmann::json(nullptr);
    rows.push_back(std::move(r));
  }
  doc["rows"] = std::move(rows);
  std::vector<std::string> warnings;
  if (std::find(c.methods.begin(), c.methods.end(), Method::hulc) != c.methods.end() &&
      c.hulc_delta == 0.0) {
    warnings.emplace_back("HulC run with delta = 0 in place of the adaptive bias estimate");
  }
  doc["warnings"] = warnings;
  return doc.dump(2) + "\n";
}

}  // namespace calib
