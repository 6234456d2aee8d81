#include "vge/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "vge/error.hpp"
#include "vge/metrics.hpp"

namespace vge::cli {

using nlohmann::json;

OutputFormat parse_format(const std::string& text) {
  if (text == "json") return OutputFormat::kJson;
  if (text == "csv") return OutputFormat::kCsv;
  throw Error(ErrorCode::kInvalidArgument, "unknown format '" + text + "' (json|csv)");
}

std::string format6(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double round6(double x) {
  if (!std::isfinite(x)) return x;
  if (x == 0.0) return 0.0;
  return std::strtod(format6(x).c_str(), nullptr);
}

namespace {

json num(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round6(x);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end == item.c_str() || *end != '\0' || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "cannot parse k value '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "empty k specification");
  return out;
}

}  // namespace

std::optional<GateParams> GateSpec::resolve(std::size_t classes) const {
  if (disabled) return std::nullopt;
  if (!raw.empty()) {
    if (raw.size() != classes) {
      throw Error(ErrorCode::kShapeMismatch, "gate file has " + std::to_string(raw.size()) +
                                                 " raw values but the input has C = " +
                                                 std::to_string(classes));
    }
    GateParams p;
    p.raw = raw;
    return p;
  }
  if (k.size() == 1) return GateParams::from_k(k.front(), classes);
  if (k.size() != classes) {
    throw Error(ErrorCode::kShapeMismatch, "--k has " + std::to_string(k.size()) +
                                               " values but the input has C = " +
                                               std::to_string(classes));
  }
  return GateParams::from_k(k);
}

GateSpec parse_k_option(const std::string& text) {
  GateSpec spec;
  if (text == "disabled" || text == "none" || text == "off") {
    spec.disabled = true;
    return spec;
  }
  spec.k = parse_list(text);
  for (double v : spec.k) {
    if (v <= 0.0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  }
  return spec;
}

GateSpec load_gate_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open gate file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, "gate file '" + path + "': " + e.what());
  }
  GateSpec spec;
  try {
    if (doc.contains("raw")) {
      spec.raw = doc.at("raw").get<std::vector<double>>();
    } else if (doc.contains("k")) {
      spec.k = doc.at("k").get<std::vector<double>>();
    } else {
      throw Error(ErrorCode::kParseError, "gate file '" + path + "' needs 'raw' or 'k'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, "gate file '" + path + "': " + e.what());
  }
  if (spec.raw.empty() && spec.k.empty()) {
    throw Error(ErrorCode::kParseError, "gate file '" + path + "' is empty");
  }
  return spec;
}

void save_gate_file(const std::string& path, const GateParams& params) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + path + "'");
  json doc;
  doc["raw"] = params.raw;  // full precision so the gate reloads exactly
  doc["k"] = params.k_values();
  out << doc.dump(2) << '\n';
}

std::size_t thread_budget() {
  const char* env = std::getenv("VGE_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) return 1;
  return static_cast<std::size_t>(v);
}

std::vector<UncertaintyReport> score_file(const io::PredictionFile& file, const ScoreConfig& config) {
  ScoreOptions options;
  options.gate = config.gate.resolve(file.batch.classes());
  options.snr_threshold = config.snr_threshold;
  options.normalize = config.normalize;
  options.regions = config.regions;
  options.threads = config.threads;
  auto reports = score_batch(file.batch, options);
  for (std::size_t b = 0; b < reports.size(); ++b) reports[b].id = file.ids[b];
  return reports;
}

namespace {

std::string decision_text(const std::optional<std::size_t>& d) {
  return d ? std::to_string(*d) : "abstain";
}

}  // namespace

void cmd_score(const io::PredictionFile& file, const ScoreConfig& config, std::ostream& out) {
  const auto reports = score_file(file, config);
  std::vector<std::string> columns{"tu", "au", "eu", "tu_gated", "au_gated", "eu_gated"};
  if (!config.decompose_only) {
    for (const char* c : {"epkl", "epjs", "snr", "vgmu"}) columns.emplace_back(c);
  }
  auto values = [&](const UncertaintyReport& r) {
    std::vector<double> v{r.plain.tu, r.plain.au, r.plain.eu, r.gated.tu, r.gated.au, r.gated.eu};
    if (!config.decompose_only) {
      for (double x : {r.epkl, r.epjs, r.snr, r.vgmu}) v.push_back(x);
    }
    return v;
  };

  if (config.format == OutputFormat::kCsv) {
    out << "id";
    for (const auto& c : columns) out << ',' << c;
    if (!config.decompose_only) out << ",decision,region";
    out << '\n';
    for (const auto& r : reports) {
      out << r.id;
      for (double x : values(r)) out << ',' << format6(x);
      if (!config.decompose_only) out << ',' << decision_text(r.decision) << ',' << region_name(r.region);
      out << '\n';
    }
    return;
  }
  for (const auto& r : reports) {
    json row = json::object();
    row["id"] = r.id;
    const auto v = values(r);
    for (std::size_t i = 0; i < columns.size(); ++i) row[columns[i]] = num(v[i]);
    if (!config.decompose_only) {
      row["decision"] = r.decision ? json(*r.decision) : json("abstain");
      row["region"] = std::string(region_name(r.region));
    }
    out << row.dump() << '\n';
  }
}

std::vector<double> score_column(const std::vector<UncertaintyReport>& reports,
                                 const std::string& name) {
  std::vector<double> out;
  out.reserve(reports.size());
  for (const auto& r : reports) {
    if (name == "vgmu") out.push_back(r.vgmu);
    else if (name == "eu") out.push_back(r.plain.eu);
    else if (name == "eu_gated") out.push_back(r.gated.eu);
    else if (name == "epkl") out.push_back(r.epkl);
    else if (name == "epjs") out.push_back(r.epjs);
    else throw Error(ErrorCode::kInvalidArgument, "unknown score '" + name + "'");
  }
  return out;
}

namespace {

std::vector<std::string> score_names(const ScoreConfig& config) {
  auto names = kScoreNames;
  if (!config.gate.disabled) names.emplace_back("eu_gated");
  return names;
}

// Entropy differences can land a rounding error below zero.
std::vector<double> clip_rounding(std::vector<double> v) {
  for (double& x : v) {
    if (x < 0.0 && x > -1e-9) x = 0.0;
  }
  return v;
}

}  // namespace

CompareOutput cmd_compare(const io::PredictionFile& file, const ScoreConfig& config) {
  if (file.batch.samples() < 2) {
    throw Error(ErrorCode::kEmptyInput, "compare needs at least two samples");
  }
  const auto reports = score_file(file, config);
  const auto names = score_names(config);
  std::vector<std::vector<double>> columns;
  for (const auto& n : names) columns.push_back(score_column(reports, n));

  json report;
  report["samples"] = file.batch.samples();
  report["scores"] = names;
  json errors = json::array();
  for (const char* metric : {"spearman", "kendall"}) {
    json matrix = json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
      json row = json::object();
      for (std::size_t j = 0; j < names.size(); ++j) {
        try {
          const double v = std::string(metric) == "spearman" ? spearman(columns[i], columns[j])
                                                             : kendall(columns[i], columns[j]);
          row[names[j]] = num(v);
        } catch (const Error& e) {
          row[names[j]] = nullptr;
          errors.push_back({{"metric", metric},
                            {"pair", names[i] + "/" + names[j]},
                            {"error", std::string(error_code_name(e.code()))}});
        }
      }
      matrix[names[i]] = std::move(row);
    }
    report[metric] = std::move(matrix);
  }

  std::ostringstream curves;
  curves << "score,fraction,cumulative_mass\n";
  json areas = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto scores = clip_rounding(columns[i]);
    try {
      areas[names[i]] = num(aucc(scores));
      for (const auto& [x, y] : aucc_curve(scores)) {
        curves << names[i] << ',' << format6(x) << ',' << format6(y) << '\n';
      }
    } catch (const Error& e) {
      areas[names[i]] = nullptr;
      errors.push_back({{"metric", "aucc"},
                        {"pair", names[i]},
                        {"error", std::string(error_code_name(e.code()))}});
    }
  }
  report["aucc"] = std::move(areas);
  report["errors"] = std::move(errors);
  return {std::move(report), curves.str()};
}

json cmd_ood(const io::PredictionFile& id, const io::PredictionFile& ood, const ScoreConfig& config) {
  if (id.batch.classes() != ood.batch.classes()) {
    throw Error(ErrorCode::kInconsistentShape,
                "ID file has C = " + std::to_string(id.batch.classes()) + ", OOD file has C = " +
                    std::to_string(ood.batch.classes()));
  }
  const auto id_reports = score_file(id, config);
  const auto ood_reports = score_file(ood, config);
  json report;
  report["id_samples"] = id.batch.samples();
  report["ood_samples"] = ood.batch.samples();
  json scores = json::object();
  for (const auto& name : score_names(config)) {
    const auto summary = roc_auc_fpr95(score_column(id_reports, name), score_column(ood_reports, name));
    scores[name] = {{"auc", num(summary.auc)}, {"fpr_at_95_tpr", num(summary.fpr_at_95_tpr)}};
  }
  report["scores"] = std::move(scores);
  return report;
}

namespace {

// Rejects draws where a clamp or floor binds or the gate saturates; in
// either case the loss is flat to within float64 noise along that direction.
bool clamps_inactive(std::span<const double> logits, const GradcheckCase& c,
                     const GateParams& params) {
  const auto probs = softmax_rows(logits, c.classes);
  const auto batch = EnsembleBatch::create(c.samples, c.members, c.classes, probs, 1e-6);
  const auto cache = vgn_forward(batch, params);
  if (cache.floored_normalizers > 0) return false;
  for (std::size_t i = 0; i < c.classes; ++i) {
    if (softplus(params.raw[i]) + params.epsilon <= params.k_min) return false;
  }
  for (double g : cache.gate.gamma) {
    if (g <= params.gamma_min || g >= kGradcheckSaturation) return false;
  }
  for (double s : cache.moments.stddev) {
    if (s == 0.0) return false;
  }
  return true;
}

}  // namespace

std::vector<GradcheckCase> random_gradchecks(const GradcheckConfig& config) {
  if (config.max_members < 2 || config.max_classes < 2 || config.max_samples < 1) {
    throw Error(ErrorCode::kInvalidArgument, "gradcheck needs B >= 1, M >= 2, C >= 2");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::vector<GradcheckCase> out;
  out.reserve(config.configurations);
  for (std::size_t i = 0; i < config.configurations; ++i) {
    GradcheckCase c;
    std::vector<double> logits;
    GateParams params;
    std::vector<std::size_t> labels;
    for (bool usable = false; !usable;) {
      ++c.attempts;
      c.samples = pick(1, config.max_samples);
      c.members = pick(2, config.max_members);
      c.classes = pick(2, config.max_classes);
      logits.resize(c.samples * c.members * c.classes);
      for (double& z : logits) z = config.logit_scale * normal(rng);
      params = GateParams::initial(c.classes);
      for (double& r : params.raw) r = 0.5 * normal(rng);
      labels.resize(c.samples);
      for (auto& l : labels) l = pick(0, c.classes - 1);
      usable = clamps_inactive(logits, c, params);
    }
    c.report = finite_diff_gradcheck(logits, c.samples, c.members, c.classes, params,
                                     cross_entropy_loss(labels, c.classes), config.h);
    out.push_back(c);
  }
  return out;
}

json gradcheck_summary(const std::vector<GradcheckCase>& cases, double tolerance) {
  double worst = 0.0, worst_input = 0.0, worst_raw = 0.0;
  std::size_t failures = 0, entries = 0;
  json rows = json::array();
  for (const auto& c : cases) {
    const double e = c.report.max_rel_error();
    worst = std::max(worst, e);
    worst_input = std::max(worst_input, c.report.max_rel_error_input);
    worst_raw = std::max(worst_raw, c.report.max_rel_error_raw);
    failures += e > tolerance;
    entries += c.report.checked;
    rows.push_back({{"B", c.samples},
                    {"M", c.members},
                    {"C", c.classes},
                    {"attempts", c.attempts},
                    {"max_rel_error", num(e)},
                    {"passed", e <= tolerance}});
  }
  return {{"configurations", cases.size()},
          {"entries_checked", entries},
          {"tolerance", tolerance},
          {"max_rel_error", num(worst)},
          {"max_rel_error_input", num(worst_input)},
          {"max_rel_error_raw", num(worst_raw)},
          {"failures", failures},
          {"passed", failures == 0},
          {"cases", std::move(rows)}};
}

namespace {

std::string k_label(const std::optional<double>& k) {
  return k ? format6(*k) : "disabled";
}

}  // namespace

void print_axiom_table(const AxiomSuiteResult& result, std::ostream& out) {
  out << std::left << std::setw(6) << "case" << std::setw(10) << "ensemble" << std::setw(10) << "k"
      << std::setw(13) << "TU" << std::setw(13) << "AU" << std::setw(13) << "EU" << "VGMU\n";
  for (const auto& r : result.rows) {
    out << std::left << std::setw(6) << r.case_name << std::setw(10) << r.ensemble << std::setw(10)
        << k_label(r.k) << std::setw(13) << format6(r.tu) << std::setw(13) << format6(r.au)
        << std::setw(13) << format6(r.eu) << format6(r.vgmu) << '\n';
  }
  out << '\n';
  for (const auto& c : result.checks) {
    const char* tag = c.passed ? "PASS" : (c.informational ? "INFO" : "FAIL");
    out << tag << "  " << c.description;
    if (c.tolerance > 0.0) {
      out << "  (observed " << format6(c.observed) << ", expected " << format6(c.expected)
          << " +/- " << format6(c.tolerance) << ')';
    }
    out << '\n';
  }
  out << (result.all_passed() ? "all axiom checks passed\n" : "axiom checks FAILED\n");
}

void write_axiom_csv(const AxiomSuiteResult& result, std::ostream& out) {
  out << "case,ensemble,k,tu,au,eu,vgmu\n";
  for (const auto& r : result.rows) {
    out << r.case_name << ',' << r.ensemble << ',' << k_label(r.k) << ',' << format6(r.tu) << ','
        << format6(r.au) << ',' << format6(r.eu) << ',' << format6(r.vgmu) << '\n';
  }
}

EnsembleBatch random_batch(std::size_t samples, std::size_t members, std::size_t classes,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> data(samples * members * classes);
  for (std::size_t row = 0; row < samples * members; ++row) {
    double total = 0.0;
    double* p = data.data() + row * classes;
    for (std::size_t c = 0; c < classes; ++c) total += (p[c] = expo(rng) + 1e-12);
    for (std::size_t c = 0; c < classes; ++c) p[c] /= total;
  }
  return EnsembleBatch::create(samples, members, classes, data, 1e-6);
}

namespace {

template <class F>
double median_seconds_per_sample(std::size_t reps, std::size_t samples, F&& body) {
  std::vector<double> times;
  times.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    body();
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    times.push_back(elapsed.count() / static_cast<double>(samples));
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  return n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

volatile double g_sink = 0.0;

}  // namespace

BenchResult run_bench(const BenchConfig& config) {
  if (config.members < 2 || config.classes < 2 || config.samples == 0 || config.reps == 0) {
    throw Error(ErrorCode::kInvalidArgument, "bench needs M >= 2, C >= 2, samples > 0, reps > 0");
  }
  const std::size_t B = config.samples, M = config.members, C = config.classes;
  const auto batch = random_batch(B, M, C, config.seed);
  const auto gate = GateParams::initial(C);

  BenchResult result;
  result.members = M;
  result.classes = C;
  result.decomposition = median_seconds_per_sample(config.reps, B, [&] {
    const auto cache = vgn_forward(batch, gate);
    double acc = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      acc += decompose(std::span<const double>(cache.gated).subspan(b * M * C, M * C), C, true).eu;
    }
    g_sink = g_sink + acc;
  });

  std::vector<double> mean(C), stddev(C), spread(C);
  result.vgmu_pipeline = median_seconds_per_sample(config.reps, B, [&] {
    double acc = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      sample_moments(batch.sample(b), M, C, kDefaultEpsilon, mean, stddev, spread);
      acc += vgmu(mean, stddev);
    }
    g_sink = g_sink + acc;
  });

  const auto moments = ensemble_moments(batch);
  result.vgmu_from_moments = median_seconds_per_sample(config.reps, B, [&] {
    double acc = 0.0;
    for (std::size_t b = 0; b < B; ++b) acc += vgmu(moments.mean_row(b), moments.stddev_row(b));
    g_sink = g_sink + acc;
  });

  result.epkl = median_seconds_per_sample(config.reps, B, [&] {
    double acc = 0.0;
    for (std::size_t b = 0; b < B; ++b) acc += epkl(batch.sample(b), C);
    g_sink = g_sink + acc;
  });
  return result;
}

json bench_json(const BenchResult& r) {
  return {{"M", r.members},
          {"C", r.classes},
          {"seconds_per_sample",
           {{"gated_decomposition", num(r.decomposition)},
            {"vgmu_pipeline", num(r.vgmu_pipeline)},
            {"vgmu_from_moments", num(r.vgmu_from_moments)},
            {"epkl", num(r.epkl)}}},
          {"ratios",
           {{"epkl_over_vgmu_pipeline", num(r.epkl / r.vgmu_pipeline)},
            {"epkl_over_vgmu_from_moments", num(r.epkl / r.vgmu_from_moments)},
            {"epkl_over_gated_decomposition", num(r.epkl / r.decomposition)}}}};
}

void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out) {
  out << "epoch,loss,accuracy,mean_eu,max_abs_eu";
  const std::size_t C = history.empty() ? 0 : history.front().k.size();
  for (std::size_t c = 0; c < C; ++c) out << ",k_" << c;
  out << '\n';
  for (const auto& h : history) {
    out << h.epoch << ',' << format6(h.loss) << ',' << format6(h.accuracy) << ','
        << format6(h.mean_eu) << ',' << format6(h.max_abs_eu);
    for (double k : h.k) out << ',' << format6(k);
    out << '\n';
  }
}

}  // namespace vge::cli
