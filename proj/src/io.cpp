#include "vge/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vge/error.hpp"

namespace vge::io {

namespace {

[[noreturn]] void fail(ErrorCode code, std::size_t line, const std::string& what) {
  throw Error(code, "line " + std::to_string(line) + ": " + what);
}

// Re-throws validation failures with the offending line attached.
ProbVector validate_row(std::span<const double> row, std::size_t line) {
  try {
    return validate_simplex(row, kIngestTolerance);
  } catch (const Error& e) {
    fail(e.code(), line, e.message());
  }
}

struct Accumulator {
  std::vector<std::string> ids;
  std::vector<std::optional<std::size_t>> labels;
  std::vector<ProbVector> rows;
  std::size_t members = 0;
  std::size_t classes = 0;

  void check_shape(std::size_t m, std::size_t c, std::size_t line) {
    if (members == 0) {
      members = m;
      classes = c;
      return;
    }
    if (m != members || c != classes) {
      fail(ErrorCode::kInconsistentShape, line,
           "sample has " + std::to_string(m) + " members x " + std::to_string(c) +
               " classes, expected " + std::to_string(members) + " x " + std::to_string(classes));
    }
  }

  PredictionFile finish() {
    if (ids.empty()) throw Error(ErrorCode::kEmptyInput, "prediction file contains no samples");
    auto batch = EnsembleBatch::from_rows(ids.size(), members, rows);
    return {std::move(ids), std::move(labels), std::move(batch)};
  }
};

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

PredictionFile read_jsonl(std::istream& in) {
  Accumulator acc;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kParseError, line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("probs") || !obj.contains("id")) {
      fail(ErrorCode::kParseError, line, "expected an object with 'id' and 'probs' fields");
    }
    const auto& id_field = obj["id"];
    const std::string id = id_field.is_string() ? id_field.get<std::string>() : id_field.dump();
    const auto& probs = obj["probs"];
    if (!probs.is_array() || probs.empty() || !probs[0].is_array()) {
      fail(ErrorCode::kParseError, line, "'probs' must be an array of member arrays");
    }
    const std::size_t m = probs.size();
    const std::size_t c = probs[0].size();
    if (m < 2) fail(ErrorCode::kTooFewMembers, line, "need at least two members");
    std::vector<ProbVector> sample;
    for (const auto& member : probs) {
      if (!member.is_array() || member.size() != c) {
        fail(ErrorCode::kInconsistentShape, line, "members differ in class count");
      }
      std::vector<double> row;
      row.reserve(c);
      for (const auto& x : member) {
        if (!x.is_number()) fail(ErrorCode::kParseError, line, "probabilities must be numbers");
        row.push_back(x.get<double>());
      }
      sample.push_back(validate_row(row, line));
    }
    acc.check_shape(m, c, line);
    std::optional<std::size_t> label;
    if (obj.contains("label") && !obj["label"].is_null()) {
      const auto& l = obj["label"];
      if (!l.is_number_integer() || l.get<long long>() < 0 ||
          static_cast<std::size_t>(l.get<long long>()) >= c) {
        fail(ErrorCode::kParseError, line, "label must be a class index in [0, C)");
      }
      label = static_cast<std::size_t>(l.get<long long>());
    }
    acc.ids.push_back(std::move(id));
    acc.labels.push_back(label);
    for (auto& r : sample) acc.rows.push_back(std::move(r));
  }
  return acc.finish();
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(text);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!text.empty() && text.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::kParseError, line, "cannot parse number '" + s + "'");
  }
  return v;
}

PredictionFile read_csv(std::istream& in) {
  std::string text;
  std::size_t line = 0;
  std::vector<std::string> header;
  while (std::getline(in, text)) {
    ++line;
    if (!blank(text)) {
      header = split_csv(text);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorCode::kEmptyInput, "prediction file contains no samples");
  if (header.size() < 4 || header[0] != "id" || header[1] != "member") {
    fail(ErrorCode::kParseError, line, "header must start with 'id,member,class_0,...'");
  }
  const bool has_label = header.back() == "label";
  const std::size_t classes = header.size() - 2 - (has_label ? 1 : 0);
  for (std::size_t c = 0; c < classes; ++c) {
    if (header[2 + c] != "class_" + std::to_string(c)) {
      fail(ErrorCode::kParseError, line, "expected column class_" + std::to_string(c));
    }
  }

  struct Pending {
    std::size_t first_line = 0;
    std::optional<std::size_t> label;
    std::map<std::size_t, ProbVector> members;
  };
  std::vector<std::string> order;
  std::map<std::string, Pending> samples;

  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    const auto f = split_csv(text);
    if (f.size() != header.size()) {
      fail(ErrorCode::kParseError, line,
           "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    }
    const double member_raw = parse_number(f[1], line);
    if (member_raw < 0 || member_raw != static_cast<double>(static_cast<std::size_t>(member_raw))) {
      fail(ErrorCode::kParseError, line, "member must be a non-negative integer");
    }
    std::vector<double> row(classes);
    for (std::size_t c = 0; c < classes; ++c) row[c] = parse_number(f[2 + c], line);
    auto [it, inserted] = samples.try_emplace(f[0]);
    auto& s = it->second;
    if (inserted) {
      order.push_back(f[0]);
      s.first_line = line;
    }
    if (has_label && !f.back().empty()) {
      const double l = parse_number(f.back(), line);
      if (l < 0 || l >= static_cast<double>(classes) || l != static_cast<double>(static_cast<std::size_t>(l))) {
        fail(ErrorCode::kParseError, line, "label must be a class index in [0, C)");
      }
      s.label = static_cast<std::size_t>(l);
    }
    const auto idx = static_cast<std::size_t>(member_raw);
    if (!s.members.emplace(idx, validate_row(row, line)).second) {
      fail(ErrorCode::kParseError, line, "duplicate member " + std::to_string(idx));
    }
  }

  Accumulator acc;
  for (const auto& id : order) {
    auto& s = samples[id];
    const std::size_t m = s.members.size();
    if (m < 2) fail(ErrorCode::kTooFewMembers, s.first_line, "sample '" + id + "' has < 2 members");
    if (s.members.rbegin()->first != m - 1) {
      fail(ErrorCode::kParseError, s.first_line, "member indices of '" + id + "' are not 0..M-1");
    }
    acc.check_shape(m, classes, s.first_line);
    acc.ids.push_back(id);
    acc.labels.push_back(s.label);
    for (auto& [idx, row] : s.members) acc.rows.push_back(std::move(row));
  }
  return acc.finish();
}

}  // namespace

InputFormat format_from_path(const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  return ext == "csv" ? InputFormat::kCsv : InputFormat::kJsonLines;
}

PredictionFile read_predictions(std::istream& in, InputFormat format) {
  return format == InputFormat::kCsv ? read_csv(in) : read_jsonl(in);
}

PredictionFile read_predictions(const std::string& path, InputFormat format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open '" + path + "'");
  if (format == InputFormat::kAuto) format = format_from_path(path);
  return read_predictions(in, format);
}

void write_predictions_jsonl(std::ostream& out, const PredictionFile& file) {
  const auto& batch = file.batch;
  for (std::size_t b = 0; b < batch.samples(); ++b) {
    nlohmann::json obj;
    obj["id"] = file.ids[b];
    auto probs = nlohmann::json::array();
    for (std::size_t m = 0; m < batch.members(); ++m) {
      const auto row = batch.member(b, m);
      probs.push_back(std::vector<double>(row.begin(), row.end()));
    }
    obj["probs"] = std::move(probs);
    if (file.labels[b]) obj["label"] = *file.labels[b];
    out << obj.dump() << '\n';
  }
}

}  // namespace vge::io
