#include "calib/cli.hpp"
#include "calib/error.hpp"

namespace calib::cli {

using nlohmann::json;

nlohmann::json to_json(const ReportDocument& doc) {
  const auto& c = doc.config;
  json j;
  j["schema_version"] = doc.schema_version;
  j["tool_version"] = doc.tool_version;
  j["input_digest"] = doc.input_digest;
  j["config"] = {{"num_classes", c.num_classes},
                 {"k", c.k},
                 {"mk", c.mk},
                 {"m", c.m},
                 {"mk_source", c.mk_source},
                 {"alpha", c.alpha},
                 {"seed", c.seed},
                 {"method", c.method},
                 {"boot_reps", c.boot_reps},
                 {"bootstrap_variant", c.bootstrap_variant},
                 {"subsample_size", c.subsample_size},
                 {"subsample_rate", c.subsample_rate},
                 {"subsample_reps", c.subsample_reps},
                 {"tcal_reps", c.tcal_reps},
                 {"hulc_delta", c.hulc_delta}};
  j["n"] = doc.n;
  j["estimate"] = {{"t", doc.t}, {"t_plus", doc.t_plus}};
  j["variances"] = {{"sigma0_sq", doc.sigma0_sq},
                    {"sigma1_hat_sq", doc.sigma1_hat_sq},
                    {"sigma1_hat", doc.sigma1_hat}};
  j["ci_squared"] = {{"lower", doc.ci_squared.lower},
                     {"upper", doc.ci_squared.upper},
                     {"includes_zero", doc.ci_squared.includes_zero},
                     {"excludes_zero_point", doc.ci_squared.excludes_zero_point},
                     {"degenerate_variance", doc.ci_squared.degenerate_variance},
                     {"case", doc.ci_squared.case_tag}};
  j["ci_root"] = {{"lower", doc.root_lower}, {"upper", doc.root_upper}};
  j["zero_threshold"] = doc.zero_threshold;
  j["p_value_calibrated"] = doc.p_value_calibrated;
  j["reject_at_alpha"] = doc.reject_at_alpha;
  if (doc.baseline) {
    j["baseline"] = {{"method", doc.baseline->method},
                     {"lower", doc.baseline->lower},
                     {"upper", doc.baseline->upper},
                     {"replications", doc.baseline->replications}};
  } else {
    j["baseline"] = nullptr;
  }
  if (doc.tcal) {
    j["tcal"] = {{"statistic", doc.tcal->statistic},
                 {"threshold", doc.tcal->threshold},
                 {"reject", doc.tcal->reject},
                 {"replications", doc.tcal->replications}};
  } else {
    j["tcal"] = nullptr;
  }
  j["warnings"] = doc.warnings;
  return j;
}

ReportDocument report_from_json(const nlohmann::json& j) {
  try {
    ReportDocument doc;
    doc.schema_version = j.at("schema_version").get<int>();
    if (doc.schema_version != kSchemaVersion) {
      throw CalibError(ErrorCode::InvalidArgument,
                       "unsupported schema_version " + std::to_string(doc.schema_version));
    }
    doc.tool_version = j.at("tool_version").get<std::string>();
    doc.input_digest = j.at("input_digest").get<std::string>();
    const auto& c = j.at("config");
    doc.config.num_classes = c.at("num_classes").get<std::size_t>();
    doc.config.k = c.at("k").get<std::size_t>();
    doc.config.mk = c.at("mk").get<std::size_t>();
    doc.config.m = c.at("m").get<double>();
    doc.config.mk_source = c.at("mk_source").get<std::string>();
    doc.config.alpha = c.at("alpha").get<double>();
    doc.config.seed = c.at("seed").get<std::uint64_t>();
    doc.config.method = c.at("method").get<std::string>();
    doc.config.boot_reps = c.at("boot_reps").get<std::size_t>();
    doc.config.bootstrap_variant = c.at("bootstrap_variant").get<std::string>();
    doc.config.subsample_size = c.at("subsample_size").get<std::size_t>();
    doc.config.subsample_rate = c.at("subsample_rate").get<double>();
    doc.config.subsample_reps = c.at("subsample_reps").get<std::size_t>();
    doc.config.tcal_reps = c.at("tcal_reps").get<std::size_t>();
    doc.config.hulc_delta = c.at("hulc_delta").get<double>();
    doc.n = j.at("n").get<std::size_t>();
    doc.t = j.at("estimate").at("t").get<double>();
    doc.t_plus = j.at("estimate").at("t_plus").get<double>();
    doc.sigma0_sq = j.at("variances").at("sigma0_sq").get<double>();
    doc.sigma1_hat_sq = j.at("variances").at("sigma1_hat_sq").get<double>();
    doc.sigma1_hat = j.at("variances").at("sigma1_hat").get<double>();
    const auto& ci = j.at("ci_squared");
    doc.ci_squared.lower = ci.at("lower").get<double>();
    doc.ci_squared.upper = ci.at("upper").get<double>();
    doc.ci_squared.includes_zero = ci.at("includes_zero").get<bool>();
    doc.ci_squared.excludes_zero_point = ci.at("excludes_zero_point").get<bool>();
    doc.ci_squared.degenerate_variance = ci.at("degenerate_variance").get<bool>();
    doc.ci_squared.case_tag = ci.at("case").get<std::string>();
    doc.root_lower = j.at("ci_root").at("lower").get<double>();
    doc.root_upper = j.at("ci_root").at("upper").get<double>();
    doc.zero_threshold = j.at("zero_threshold").get<double>();
    doc.p_value_calibrated = j.at("p_value_calibrated").get<double>();
    doc.reject_at_alpha = j.at("reject_at_alpha").get<bool>();
    if (const auto& b = j.at("baseline"); !b.is_null()) {
      doc.baseline = ReportBaseline{b.at("method").get<std::string>(), b.at("lower").get<double>(),
                                    b.at("upper").get<double>(),
                                    b.at("replications").get<std::size_t>()};
    }
    if (const auto& t = j.at("tcal"); !t.is_null()) {
      doc.tcal = ReportTcal{t.at("statistic").get<double>(), t.at("threshold").get<double>(),
                            t.at("reject").get<bool>(), t.at("replications").get<std::size_t>()};
    }
    doc.warnings = j.at("warnings").get<std::vector<std::string>>();
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw CalibError(ErrorCode::InvalidArgument, std::string("malformed report: ") + e.what());
  }
}

}  // namespace calib::cli
