#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vge/commands.hpp"
#include "vge/error.hpp"

namespace {

using namespace vge;
using namespace vge::cli;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;

struct GateFlags {
  std::string k = "1";
  std::string k_file;

  GateSpec spec() const { return k_file.empty() ? parse_k_option(k) : load_gate_file(k_file); }
};

struct ScoreFlags {
  GateFlags gate;
  double snr_threshold = 1.0;
  double conf_threshold = 0.5;
  double spread_threshold = 0.1;
  bool normalize = false;
  std::string format = "json";

  ScoreConfig config() const {
    ScoreConfig c;
    c.gate = gate.spec();
    c.snr_threshold = snr_threshold;
    c.normalize = normalize;
    c.regions = {conf_threshold, spread_threshold};
    c.format = parse_format(format);
    c.threads = thread_budget();
    return c;
  }
};

void add_gate_flags(CLI::App* app, GateFlags& g) {
  app->add_option("--k", g.k, "gate sensitivity: scalar, per-class list a,b,c, or 'disabled'")
      ->capture_default_str();
  app->add_option("--k-file", g.k_file, "JSON file with learned gate parameters {\"raw\": [...]}");
}

void add_score_flags(CLI::App* app, ScoreFlags& f) {
  add_gate_flags(app, f.gate);
  app->add_option("--snr-threshold", f.snr_threshold, "predict only when SNR exceeds this")
      ->capture_default_str();
  app->add_option("--conf-threshold", f.conf_threshold, "region confidence threshold")
      ->capture_default_str();
  app->add_option("--spread-threshold", f.spread_threshold, "region spread threshold")
      ->capture_default_str();
  app->add_flag("--normalize", f.normalize, "divide entropies by ln C");
}

// Writes to the file if given, otherwise stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + path + "'");
    }
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-gated ensemble uncertainty toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "random seed for generated data")->capture_default_str();

  std::string input, output, id_input, ood_input, curves;

  ScoreFlags score_flags;
  auto* score = app.add_subcommand("score", "per-sample uncertainty report");
  score->add_option("input", input, "prediction file (.jsonl or .csv)")->required();
  score->add_option("-o,--output", output, "output path (default stdout)");
  score->add_option("--format", score_flags.format, "json|csv")->capture_default_str();
  add_score_flags(score, score_flags);

  auto* decomp = app.add_subcommand("decompose", "entropy decomposition only");
  decomp->add_option("input", input, "prediction file")->required();
  decomp->add_option("-o,--output", output, "output path (default stdout)");
  decomp->add_option("--format", score_flags.format, "json|csv")->capture_default_str();
  add_score_flags(decomp, score_flags);

  auto* compare = app.add_subcommand("compare", "rank correlation and AUCc among scores");
  compare->add_option("input", input, "prediction file")->required();
  compare->add_option("-o,--output", output, "JSON report path (default stdout)");
  compare->add_option("--curves", curves, "CSV path for AUCc curves");
  add_score_flags(compare, score_flags);

  auto* ood = app.add_subcommand("ood", "OOD detection AUC and FPR@95 per score");
  ood->add_option("id_input", id_input, "in-distribution prediction file")->required();
  ood->add_option("ood_input", ood_input, "out-of-distribution prediction file")->required();
  ood->add_option("-o,--output", output, "output path (default stdout)");
  add_score_flags(ood, score_flags);

  GradcheckConfig gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the VGN backward pass");
  gradcheck->add_option("--configs", gc.configurations)->capture_default_str();
  gradcheck->add_option("--max-b", gc.max_samples)->capture_default_str();
  gradcheck->add_option("--max-m", gc.max_members)->capture_default_str();
  gradcheck->add_option("--max-c", gc.max_classes)->capture_default_str();
  gradcheck->add_option("--step", gc.h, "central-difference step")->capture_default_str();
  gradcheck->add_option("--tol", gc.tolerance, "relative error tolerance")->capture_default_str();
  gradcheck->add_option("-o,--output", output, "output path (default stdout)");

  std::string axioms_csv;
  auto* axioms = app.add_subcommand("axioms", "run the axiom suite");
  axioms->add_option("--csv", axioms_csv, "also write the table as CSV");

  BenchConfig bc;
  auto* bench = app.add_subcommand("bench", "time gated decomposition, VGMU and EPKL");
  bench->add_option("--M", bc.members)->capture_default_str();
  bench->add_option("--C", bc.classes)->capture_default_str();
  bench->add_option("--samples", bc.samples)->capture_default_str();
  bench->add_option("--reps", bc.reps)->capture_default_str();
  bench->add_option("-o,--output", output, "output path (default stdout)");

  TrainConfig tc;
  std::string save_gate;
  auto* train = app.add_subcommand("demo-train", "train a toy ensemble through the VGN mixture");
  train->add_option("--M", tc.members)->capture_default_str();
  train->add_option("--C", tc.classes)->capture_default_str();
  train->add_option("--D", tc.features)->capture_default_str();
  train->add_option("--per-class", tc.samples_per_class)->capture_default_str();
  train->add_option("--lr", tc.learning_rate)->capture_default_str();
  train->add_option("--epochs", tc.epochs)->capture_default_str();
  train->add_option("--fixed-k", tc.fixed_k, "k used when --no-learn-k is given")->capture_default_str();
  bool no_learn_k = false;
  train->add_flag("--no-learn-k", no_learn_k, "keep k fixed");
  train->add_flag("--identical-init", tc.identical_init, "initialize all members identically");
  train->add_option("-o,--output", output, "history CSV path (default stdout)");
  train->add_option("--save-gate", save_gate, "write learned gate parameters as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (score->parsed() || decomp->parsed()) {
      auto config = score_flags.config();
      config.decompose_only = decomp->parsed();
      const auto file = io::read_predictions(input);
      Sink sink(output);
      cmd_score(file, config, sink.get());
      return kExitOk;
    }
    if (compare->parsed()) {
      const auto file = io::read_predictions(input);
      const auto result = cmd_compare(file, score_flags.config());
      Sink(output).get() << result.report.dump(2) << '\n';
      if (!curves.empty()) Sink(curves).get() << result.curves_csv;
      return kExitOk;
    }
    if (ood->parsed()) {
      const auto config = score_flags.config();
      const auto id_file = io::read_predictions(id_input);
      const auto ood_file = io::read_predictions(ood_input);
      Sink(output).get() << cmd_ood(id_file, ood_file, config).dump(2) << '\n';
      return kExitOk;
    }
    if (gradcheck->parsed()) {
      gc.seed = seed;
      const auto summary = gradcheck_summary(random_gradchecks(gc), gc.tolerance);
      Sink(output).get() << summary.dump(2) << '\n';
      return summary["passed"].get<bool>() ? kExitOk : kExitFailure;
    }
    if (axioms->parsed()) {
      const auto result = run_axiom_suite();
      print_axiom_table(result, std::cout);
      if (!axioms_csv.empty()) write_axiom_csv(result, Sink(axioms_csv).get());
      return result.all_passed() ? kExitOk : kExitFailure;
    }
    if (bench->parsed()) {
      bc.seed = seed;
      Sink(output).get() << bench_json(run_bench(bc)).dump(2) << '\n';
      return kExitOk;
    }
    if (train->parsed()) {
      if (app.count("--seed") > 0) tc.seed = seed;
      tc.learn_k = !no_learn_k;
      const auto result = train_toy_ensemble(tc);
      write_history_csv(result.history, Sink(output).get());
      if (!save_gate.empty()) save_gate_file(save_gate, result.gate);
      const auto& last = result.history.back();
      std::cerr << "final loss " << format6(last.loss) << ", accuracy " << format6(last.accuracy)
                << ", lr " << format6(result.learning_rate) << '\n';
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kDivergence ? kExitFailure : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
