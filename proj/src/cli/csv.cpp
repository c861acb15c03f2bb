#include <charconv>
#include <fstream>
#include <openssl/evp.h>
#include <sstream>
#include <string>

#include "calib/cli.hpp"
#include "calib/error.hpp"

namespace calib::cli {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<long> to_integer(std::string_view s) {
  s = trim(s);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

enum class LabelMode { index, one_hot };

struct Header {
  std::size_t num_classes = 0;
  LabelMode mode = LabelMode::index;
};

Header parse_header(std::string_view line) {
  const auto fields = split_fields(line);
  Header h;
  bool has_label = false;
  std::size_t y_count = 0;
  for (auto f : fields) {
    f = trim(f);
    if (f == "label") has_label = true;
    if (f.starts_with("y_")) ++y_count;
  }
  if (has_label && y_count > 0) {
    throw ParseError(ErrorCode::MixedLabelModes, 1, "header has both label and y_ columns");
  }
  while (h.num_classes < fields.size() &&
         trim(fields[h.num_classes]) == "z_" + std::to_string(h.num_classes + 1)) {
    ++h.num_classes;
  }
  if (h.num_classes < 2) throw ParseError(ErrorCode::MalformedHeader, 1, "expected z_1,...,z_K");
  const std::size_t rest = fields.size() - h.num_classes;
  if (rest == 1 && trim(fields.back()) == "label") {
    h.mode = LabelMode::index;
    return h;
  }
  if (rest == h.num_classes) {
    for (std::size_t j = 0; j < h.num_classes; ++j) {
      if (trim(fields[h.num_classes + j]) != "y_" + std::to_string(j + 1)) {
        throw ParseError(ErrorCode::MalformedHeader, 1, "expected y_1,...,y_K after z columns");
      }
    }
    h.mode = LabelMode::one_hot;
    return h;
  }
  throw ParseError(ErrorCode::MalformedHeader, 1,
                   "expected z_1,...,z_K followed by label or y_1,...,y_K");
}

}  // namespace

Dataset parse_predictions_text(std::string_view text) {
  std::size_t line_no = 0;
  std::optional<Header> header;
  std::vector<double> probs;
  std::vector<int> labels;

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (!header) {
      header = parse_header(line);
      continue;
    }
    if (trim(line).empty()) continue;

    const std::size_t K = header->num_classes;
    const auto fields = split_fields(line);
    const std::size_t expected = header->mode == LabelMode::index ? K + 1 : 2 * K;
    if (fields.size() != expected) {
      throw ParseError(ErrorCode::MalformedRow, line_no,
                       "expected " + std::to_string(expected) + " fields, got " +
                           std::to_string(fields.size()));
    }
    const std::size_t offset = probs.size();
    for (std::size_t j = 0; j < K; ++j) {
      const auto v = to_double(fields[j]);
      if (!v) throw ParseError(ErrorCode::MalformedRow, line_no, "bad number in z_" + std::to_string(j + 1));
      probs.push_back(*v);
    }
    try {
      check_probability_row({probs.data() + offset, K});
    } catch (const CalibError& e) {
      throw ParseError(e.code(), line_no, e.detail());
    }

    long label = -1;
    if (header->mode == LabelMode::index) {
      const auto v = to_integer(fields[K]);
      if (!v) throw ParseError(ErrorCode::MalformedRow, line_no, "label is not an integer");
      label = *v;
    } else {
      for (std::size_t j = 0; j < K; ++j) {
        const auto v = to_double(fields[K + j]);
        if (!v || (*v != 0.0 && *v != 1.0)) {
          throw ParseError(ErrorCode::MalformedRow, line_no, "one-hot entries must be 0 or 1");
        }
        if (*v == 1.0) {
          if (label >= 0) throw ParseError(ErrorCode::MalformedRow, line_no, "more than one hot entry");
          label = static_cast<long>(j);
        }
      }
      if (label < 0) throw ParseError(ErrorCode::MalformedRow, line_no, "no hot entry");
    }
    if (label < 0 || static_cast<std::size_t>(label) >= K) {
      throw ParseError(ErrorCode::LabelOutOfRange, line_no, "label " + std::to_string(label));
    }
    labels.push_back(static_cast<int>(label));
  }
  if (!header) throw ParseError(ErrorCode::MalformedHeader, 1, "empty file");
  if (labels.empty()) throw ParseError(ErrorCode::EmptyDataset, line_no, "no data rows");
  return Dataset::validate(header->num_classes, std::move(probs), std::move(labels));
}

Dataset parse_predictions_csv(const std::string& path) {
  return parse_predictions_text(read_file(path));
}

std::string predictions_csv(const Dataset& data, bool one_hot) {
  const std::size_t K = data.num_classes();
  std::string out;
  for (std::size_t j = 1; j <= K; ++j) out += "z_" + std::to_string(j) + ',';
  if (one_hot) {
    for (std::size_t j = 1; j <= K; ++j) out += "y_" + std::to_string(j) + (j == K ? "\n" : ",");
  } else {
    out += "label\n";
  }
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double p : data.row(i)) {
      const auto res = std::to_chars(buf, buf + sizeof buf, p);
      out.append(buf, res.ptr);
      out += ',';
    }
    if (one_hot) {
      for (std::size_t j = 0; j < K; ++j) {
        out += static_cast<std::size_t>(data.label(i)) == j ? '1' : '0';
        out += j + 1 == K ? '\n' : ',';
      }
    } else {
      out += std::to_string(data.label(i)) + '\n';
    }
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CalibError(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CalibError(ErrorCode::IoError, "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw CalibError(ErrorCode::IoError, "write failed for " + path);
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw CalibError(ErrorCode::IoError, "SHA-256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

}  // namespace calib::cli
