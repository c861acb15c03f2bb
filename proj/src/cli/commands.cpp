#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <optional>

#include "calib/baselines.hpp"
#include "calib/cli.hpp"
#include "calib/error.hpp"
#include "calib/inference.hpp"
#include "calib/parallel.hpp"
#include "calib/variance.hpp"

namespace calib::cli {

namespace {

struct ComputeOptions {
  std::string input;
  std::string out;
  std::size_t k = 1;
  std::optional<std::size_t> mk;
  double smoothness = 1.0;
  double bin_constant = 1.0;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  std::optional<int> threads;
  std::string method = "adjusted";
  std::size_t boot_reps = 1000;
  std::size_t subsample_size = 0;
  double subsample_rate = 0.5;
  std::size_t subsample_reps = 1000;
  std::size_t tcal_reps = 1000;
  double hulc_delta = 0.0;
};

struct SimulateOptions {
  std::string config;
  std::string out = "results";
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool timings = false;
};

struct GenerateOptions {
  int setting = 1;
  double beta = 1.0;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  bool one_hot = false;
  std::string out;
};

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file(path, text);
  }
}

int cmd_compute(const ComputeOptions& opt, std::ostream& out, std::ostream& err) {
  set_threads(resolve_threads(opt.threads));
  const std::string bytes = read_file(opt.input);
  const Dataset data = parse_predictions_text(bytes);
  const auto method = parse_method(opt.method);
  if (!method) throw CalibError(ErrorCode::InvalidArgument, "unknown method " + opt.method);
  const std::size_t K = data.num_classes();
  if (opt.k < 1 || opt.k > K) {
    throw CalibError(ErrorCode::DepthOutOfRange,
                     "k=" + std::to_string(opt.k) + " with K=" + std::to_string(K));
  }

  ReportDocument doc;
  doc.input_digest = "sha256:" + sha256_hex(bytes);
  auto& c = doc.config;
  c.num_classes = K;
  c.k = opt.k;
  if (opt.mk) {
    c.mk = *opt.mk;
    c.mk_source = "flag";
  } else if (opt.k == 1) {
    c.mk = 50;
    c.mk_source = "default";
  } else {
    c.mk = choose_m(data.size(), opt.k, K, opt.smoothness, opt.bin_constant) * K;
    c.mk_source = "rule";
  }
  c.alpha = opt.alpha;
  c.seed = opt.seed;
  c.method = opt.method;
  c.boot_reps = opt.boot_reps;
  c.subsample_size = opt.subsample_size;
  c.subsample_rate = opt.subsample_rate;
  c.subsample_reps = opt.subsample_reps;
  c.tcal_reps = opt.tcal_reps;
  c.hulc_delta = opt.hulc_delta;

  const PartitionSpec spec = PartitionSpec::make(K, opt.k, c.mk);
  c.m = spec.m();
  const TopKView view = topk_project(data, opt.k);
  const double s0 = sigma0_sq(K, opt.k);
  const EstimateReport rep = analyze(view, spec, opt.alpha, s0);

  doc.n = data.size();
  doc.t = rep.estimate.t;
  doc.t_plus = rep.estimate.t_plus;
  doc.sigma0_sq = rep.variances.sigma0_sq;
  doc.sigma1_hat_sq = rep.variances.sigma1_hat_sq;
  doc.sigma1_hat = rep.variances.sigma1_hat;
  doc.ci_squared = {rep.ci_squared.lower,           rep.ci_squared.upper,
                    rep.ci_squared.includes_zero,   rep.ci_squared.excludes_zero_point,
                    rep.ci_squared.degenerate_variance, std::string(to_string(rep.ci_squared.case_tag))};
  doc.root_lower = rep.root_lower;
  doc.root_upper = rep.root_upper;
  doc.zero_threshold = rep.zero_threshold;
  doc.p_value_calibrated = rep.p_value_calibrated;
  doc.reject_at_alpha = rep.reject_at_alpha;
  if (rep.ci_squared.degenerate_variance) {
    doc.warnings.emplace_back("degenerate variance: sigma1_hat = 0, point interval reported");
  }

  ResampleConfig rc;
  rc.alpha = opt.alpha;
  rc.seed = opt.seed;
  switch (*method) {
    case Method::adjusted:
      break;
    case Method::bootstrap: {
      rc.replications = opt.boot_reps;
      const auto ci = bootstrap_ci(BinnedResiduals(view, spec), rc);
      doc.baseline = ReportBaseline{opt.method, ci.lower, ci.upper, ci.replications};
      break;
    }
    case Method::subsampling: {
      rc.method = ResampleMethod::subsampling;
      rc.replications = opt.subsample_reps;
      rc.subsample_size = opt.subsample_size;
      rc.rate_exponent = opt.subsample_rate;
      const auto ci = subsampling_ci(BinnedResiduals(view, spec), rep.estimate.t, rc);
      doc.baseline = ReportBaseline{opt.method, ci.lower, ci.upper, ci.replications};
      break;
    }
    case Method::hulc: {
      const auto ci = hulc_ci(BinnedResiduals(view, spec), opt.alpha, opt.seed, opt.hulc_delta);
      doc.baseline = ReportBaseline{opt.method, ci.lower, ci.upper, ci.replications};
      if (opt.hulc_delta == 0.0) {
        doc.warnings.emplace_back("HulC run with delta = 0 in place of the adaptive bias estimate");
      }
      break;
    }
    case Method::tcal: {
      const double stat = tcal_statistic(bin_stats(view, spec), view.n);
      const double threshold = tcal_threshold(view, spec, opt.alpha, opt.tcal_reps, opt.seed);
      doc.tcal = ReportTcal{stat, threshold, stat > threshold, opt.tcal_reps};
      break;
    }
  }
  emit(to_json(doc).dump(2) + "\n", opt.out, out);
  (void)err;
  return 0;
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
  set_threads(resolve_threads(opt.threads));
  ExperimentConfig cfg = load_experiment_config(opt.config);
  if (opt.reps) cfg.reps = *opt.reps;
  if (opt.seed) cfg.seed = *opt.seed;
  const ExperimentResult result = run_experiment(cfg);
  write_file(opt.out + ".csv", experiment_csv(result));
  write_file(opt.out + ".json", experiment_json(result));
  err << "setting " << cfg.setting << ": " << result.rows.size() << " rows, " << cfg.reps
      << " replications per point";
  if (opt.timings) err << ", " << result.seconds << " s";
  err << "\n";
  out << opt.out << ".csv\n" << opt.out << ".json\n";
  return 0;
}

int cmd_generate(const GenerateOptions& opt, std::ostream& out) {
  SettingConfig sc = SettingConfig::defaults(opt.setting, opt.beta, opt.n);
  Rng rng = make_rng(opt.seed, {static_cast<std::uint64_t>(opt.setting)});
  emit(predictions_csv(generate(sc, rng), opt.one_hot), opt.out, out);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Debiased top-1-to-k calibration error: estimates, confidence intervals, simulations"};
  app.name("calib_ci");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  ComputeOptions copt;
  auto* compute = app.add_subcommand("compute", "Estimate ECE^2 and its confidence interval");
  compute->add_option("--input", copt.input, "Predictions CSV")->required();
  compute->add_option("--out", copt.out, "Report path (default stdout)");
  compute->add_option("--k", copt.k, "Top-k depth")->check(CLI::PositiveNumber);
  compute->add_option("--mk", copt.mk, "Cells per axis (inverse cell side); overrides the bin rule");
  compute->add_option("--smoothness", copt.smoothness, "Holder exponent s for the bin rule");
  compute->add_option("--bin-constant", copt.bin_constant, "Constant c for the bin rule");
  compute->add_option("--alpha", copt.alpha, "Miscoverage level");
  compute->add_option("--seed", copt.seed, "Seed for resampling methods");
  compute->add_option("--threads", copt.threads, "Worker threads (env CALIB_CI_THREADS)");
  compute->add_option("--method", copt.method, "adjusted|bootstrap|subsampling|hulc|tcal");
  compute->add_option("--boot-reps", copt.boot_reps, "Bootstrap replications");
  compute->add_option("--subsample-size", copt.subsample_size, "Subsample size (0: floor(sqrt(n)))");
  compute->add_option("--subsample-rate", copt.subsample_rate, "Rate exponent: tau_n = n^rate");
  compute->add_option("--subsample-reps", copt.subsample_reps, "Subsampling replications");
  compute->add_option("--tcal-reps", copt.tcal_reps, "T-Cal Monte-Carlo replications");
  compute->add_option("--hulc-delta", copt.hulc_delta, "HulC median-bias bound");

  SimulateOptions sopt;
  auto* simulate = app.add_subcommand("simulate", "Run a coverage/power experiment");
  simulate->add_option("--config", sopt.config, "Experiment config (.toml or .json)")->required();
  simulate->add_option("--out", sopt.out, "Output prefix; writes <prefix>.csv and <prefix>.json");
  simulate->add_option("--reps", sopt.reps, "Datasets per grid point");
  simulate->add_option("--seed", sopt.seed, "Master seed");
  simulate->add_option("--threads", sopt.threads, "Worker threads (env CALIB_CI_THREADS)");
  simulate->add_flag("--timings", sopt.timings, "Report wall-clock time on stderr");

  GenerateOptions gopt;
  auto* gen = app.add_subcommand("generate", "Export a synthetic predictions CSV");
  gen->add_option("--setting", gopt.setting, "1, 2 or 3")->required();
  gen->add_option("--beta", gopt.beta, "Miscalibration parameter");
  gen->add_option("--n", gopt.n, "Examples");
  gen->add_option("--seed", gopt.seed, "Seed");
  gen->add_flag("--one-hot", gopt.one_hot, "Write y_1..y_K columns instead of label");
  gen->add_option("--out", gopt.out, "Output path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*compute) return cmd_compute(copt, out, err);
    if (*simulate) return cmd_simulate(sopt, out, err);
    if (*gen) return cmd_generate(gopt, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const CalibError& e) {
    err << "error: " << e.what() << "\n";
    return is_numerical(e.code()) ? 3 : 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace calib::cli
