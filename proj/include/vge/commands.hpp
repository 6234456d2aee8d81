#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vge/axioms.hpp"
#include "vge/gate.hpp"
#include "vge/io.hpp"
#include "vge/traindemo.hpp"
#include "vge/uncertainty.hpp"
#include "vge/vgn.hpp"

// Library side of the `vge` command-line tool. Every command writes to a
// caller-supplied stream so it can be driven from tests.
namespace vge::cli {

enum class OutputFormat { kJson, kCsv };

OutputFormat parse_format(const std::string& text);

// Rounds to 6 significant digits (the precision of every printed float).
double round6(double x);
std::string format6(double x);

// --k value: "disabled", a scalar, or a comma-separated per-class list.
// A gate file holds {"raw": [...]} or {"k": [...]}.
struct GateSpec {
  bool disabled = false;
  std::vector<double> k;
  std::vector<double> raw;

  // Throws kShapeMismatch when a per-class list does not match C.
  std::optional<GateParams> resolve(std::size_t classes) const;
};

GateSpec parse_k_option(const std::string& text);
GateSpec load_gate_file(const std::string& path);
void save_gate_file(const std::string& path, const GateParams& params);

// VGE_THREADS if set to a positive integer, otherwise 1.
std::size_t thread_budget();

struct ScoreConfig {
  GateSpec gate;
  double snr_threshold = 1.0;
  bool normalize = false;
  RegionThresholds regions;
  OutputFormat format = OutputFormat::kJson;
  bool decompose_only = false;  // tu/au/eu (plain and gated) only
  std::size_t threads = 1;
};

std::vector<UncertaintyReport> score_file(const io::PredictionFile& file, const ScoreConfig& config);
void cmd_score(const io::PredictionFile& file, const ScoreConfig& config, std::ostream& out);

// Scores compared by `compare` and `ood`, in output order.
inline const std::vector<std::string> kScoreNames{"vgmu", "eu", "epkl", "epjs"};
std::vector<double> score_column(const std::vector<UncertaintyReport>& reports,
                                 const std::string& name);

struct CompareOutput {
  nlohmann::json report;
  std::string curves_csv;  // score,fraction,cumulative_mass
};
CompareOutput cmd_compare(const io::PredictionFile& file, const ScoreConfig& config);

nlohmann::json cmd_ood(const io::PredictionFile& id, const io::PredictionFile& ood,
                       const ScoreConfig& config);

struct GradcheckConfig {
  std::size_t configurations = 100;
  std::size_t max_samples = 4;
  std::size_t max_members = 5;
  std::size_t max_classes = 6;
  double logit_scale = 1.0;
  double h = 1e-5;
  double tolerance = 1e-5;
  std::uint64_t seed = 0;
};

// Random draws with any gate value at or above this are resampled.
inline constexpr double kGradcheckSaturation = 0.999;

struct GradcheckCase {
  std::size_t samples = 0, members = 0, classes = 0;
  std::size_t attempts = 0;  // draws until one had every clamp inactive
  GradcheckReport report;
};

// Random (B, M, C, logits, gate raw, labels) configurations checked against
// central differences of the mean cross-entropy on the mixture. Draws with an
// active clamp, a floored normalizer or a saturated gate are redrawn.
std::vector<GradcheckCase> random_gradchecks(const GradcheckConfig& config);
nlohmann::json gradcheck_summary(const std::vector<GradcheckCase>& cases, double tolerance);

// Prints the suite as an aligned table; optionally writes rows as CSV.
void print_axiom_table(const AxiomSuiteResult& result, std::ostream& out);
void write_axiom_csv(const AxiomSuiteResult& result, std::ostream& out);

struct BenchConfig {
  std::size_t members = 100;
  std::size_t classes = 100;
  std::size_t samples = 64;
  std::size_t reps = 5;
  std::uint64_t seed = 0;
};

struct BenchResult {
  std::size_t members = 0, classes = 0;
  // Median over repetitions of seconds per sample.
  double decomposition = 0.0;     // moments, gate, gated members, decomposition
  double vgmu_pipeline = 0.0;     // moments + VGMU from the raw members
  double vgmu_from_moments = 0.0; // VGMU alone, moments precomputed
  double epkl = 0.0;
  double epkl_over_vgmu() const { return epkl / vgmu_pipeline; }
};

BenchResult run_bench(const BenchConfig& config);
nlohmann::json bench_json(const BenchResult& result);

// Random member probabilities (Dirichlet(1) rows), B x M x C.
EnsembleBatch random_batch(std::size_t samples, std::size_t members, std::size_t classes,
                           std::uint64_t seed);

void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out);

}  // namespace vge::cli
