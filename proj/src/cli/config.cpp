#include <charconv>
#include <set>
#include <string>

#include "calib/cli.hpp"
#include "calib/error.hpp"

namespace calib::cli {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void config_error(std::size_t line, const std::string& what) {
  throw CalibError(ErrorCode::ConfigError, "line " + std::to_string(line) + ": " + what);
}

std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

json parse_scalar(std::string_view v, std::size_t line) {
  v = trim(v);
  if (v.empty()) config_error(line, "missing value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') config_error(line, "unterminated string");
    return std::string(v.substr(1, v.size() - 2));
  }
  if (v == "true") return true;
  if (v == "false") return false;
  std::string digits;
  for (char ch : v) {
    if (ch != '_') digits += ch;
  }
  const bool integral = digits.find_first_of(".eE") == std::string::npos &&
                        digits != "inf" && digits != "nan";
  if (integral) {
    long long i = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), i);
    if (ec == std::errc() && ptr == digits.data() + digits.size()) return i;
  }
  double d = 0.0;
  const char* first = digits.data();
  if (!digits.empty() && digits.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, digits.data() + digits.size(), d);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) {
    config_error(line, "cannot parse value '" + std::string(v) + "'");
  }
  return d;
}

json parse_value(std::string_view v, std::size_t line) {
  v = trim(v);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') config_error(line, "arrays must close on the same line");
    json arr = json::array();
    std::string_view body = trim(v.substr(1, v.size() - 2));
    while (!body.empty()) {
      std::size_t comma = std::string_view::npos;
      bool in_string = false;
      for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] == '"') in_string = !in_string;
        if (body[i] == ',' && !in_string) {
          comma = i;
          break;
        }
      }
      const auto item = trim(body.substr(0, comma));
      if (!item.empty()) arr.push_back(parse_scalar(item, line));
      if (comma == std::string_view::npos) break;
      body = trim(body.substr(comma + 1));
    }
    return arr;
  }
  return parse_scalar(v, line);
}

std::size_t as_size(const json& j, const char* key) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw CalibError(ErrorCode::ConfigError, std::string(key) + " must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

double as_double(const json& j, const char* key) {
  if (!j.is_number()) throw CalibError(ErrorCode::ConfigError, std::string(key) + " must be a number");
  return j.get<double>();
}

}  // namespace

nlohmann::json parse_toml_subset(std::string_view text) {
  json root = json::object();
  json* table = &root;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(strip_comment(text.substr(pos, end - pos)));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') config_error(line_no, "malformed table header");
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (name.empty()) config_error(line_no, "empty table name");
      table = &root[name];
      if (!table->is_object()) *table = json::object();
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) config_error(line_no, "expected key = value");
    std::string key(trim(line.substr(0, eq)));
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
    if (key.empty()) config_error(line_no, "empty key");
    if (table->contains(key)) config_error(line_no, "duplicate key '" + key + "'");
    (*table)[key] = parse_value(line.substr(eq + 1), line_no);
  }
  return root;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw CalibError(ErrorCode::ConfigError, "config must be a table");
  static const std::set<std::string> known = {
      "setting",     "betas",          "beta_grid",      "n",         "mk",
      "methods",     "reps",           "alpha",          "seed",      "boot_reps",
      "subsample_reps", "subsample_size", "subsample_rate", "tcal_reps", "hulc_delta"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw CalibError(ErrorCode::ConfigError, "unknown key '" + key + "'");
  }
  ExperimentConfig cfg;
  if (!j.contains("setting")) throw CalibError(ErrorCode::ConfigError, "missing 'setting'");
  cfg.setting = static_cast<int>(as_size(j["setting"], "setting"));
  if (cfg.setting < 1 || cfg.setting > 3) {
    throw CalibError(ErrorCode::ConfigError, "setting must be 1, 2 or 3");
  }
  if (j.contains("betas") && j.contains("beta_grid")) {
    throw CalibError(ErrorCode::ConfigError, "give either 'betas' or 'beta_grid'");
  }
  if (j.contains("betas")) {
    if (!j["betas"].is_array()) throw CalibError(ErrorCode::ConfigError, "betas must be an array");
    for (const auto& b : j["betas"]) cfg.betas.push_back(as_double(b, "betas"));
  } else {
    const std::string grid = j.value("beta_grid", std::string("default"));
    if (grid != "default") throw CalibError(ErrorCode::ConfigError, "beta_grid must be \"default\"");
    cfg.betas = default_beta_grid(cfg.setting);
  }
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : j["methods"]) {
      if (!m.is_string()) throw CalibError(ErrorCode::ConfigError, "methods must be strings");
      const auto parsed = parse_method(m.get<std::string>());
      if (!parsed) throw CalibError(ErrorCode::ConfigError, "unknown method " + m.get<std::string>());
      cfg.methods.push_back(*parsed);
    }
  }
  if (j.contains("n")) cfg.n = as_size(j["n"], "n");
  if (j.contains("mk")) cfg.cells_per_axis = as_size(j["mk"], "mk");
  if (j.contains("reps")) cfg.reps = as_size(j["reps"], "reps");
  if (j.contains("alpha")) cfg.alpha = as_double(j["alpha"], "alpha");
  if (j.contains("seed")) cfg.seed = as_size(j["seed"], "seed");
  if (j.contains("boot_reps")) cfg.boot_reps = as_size(j["boot_reps"], "boot_reps");
  if (j.contains("subsample_reps")) cfg.subsample_reps = as_size(j["subsample_reps"], "subsample_reps");
  if (j.contains("subsample_size")) cfg.subsample_size = as_size(j["subsample_size"], "subsample_size");
  if (j.contains("subsample_rate")) cfg.subsample_rate = as_double(j["subsample_rate"], "subsample_rate");
  if (j.contains("tcal_reps")) cfg.tcal_reps = as_size(j["tcal_reps"], "tcal_reps");
  if (j.contains("hulc_delta")) cfg.hulc_delta = as_double(j["hulc_delta"], "hulc_delta");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw CalibError(ErrorCode::ConfigError, "alpha must lie in (0, 1)");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  if (path.ends_with(".json")) {
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw CalibError(ErrorCode::ConfigError, e.what());
    }
  } else {
    j = parse_toml_subset(text);
  }
  return experiment_config_from_json(j);
}

}  // namespace calib::cli
