#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "vge/commands.hpp"
#include "vge/io.hpp"

namespace vge {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" VGE_CLI_PATH "' " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) { return "'" + std::string(VGE_TEST_DATA) + "/" + name + "'"; }

std::vector<json> json_lines(const std::string& text) {
  std::vector<json> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(json::parse(line));
  }
  return rows;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("vge_cli_test_" + std::to_string(::getpid()) + "_" + name);
}

fs::path write_random(const std::string& name, std::size_t samples, std::uint64_t seed) {
  io::PredictionFile f{{}, std::vector<std::optional<std::size_t>>(samples),
                       cli::random_batch(samples, 5, 4, seed)};
  for (std::size_t i = 0; i < samples; ++i) f.ids.push_back("r" + std::to_string(i));
  const auto path = temp_file(name);
  std::ofstream out(path);
  io::write_predictions_jsonl(out, f);
  return path;
}

TEST(Cli, ScoreA3SpreadExample) {
  const auto r = run("score --k disabled " + data("a3_spread.jsonl"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rows = json_lines(r.out);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0]["vgmu"].get<double>(), 0.409862, 1e-6);
  EXPECT_EQ(rows[0]["id"], "a3-spread");
}

TEST(Cli, IdenticalMembersHaveZeroEpistemic) {
  const auto r = run("score " + data("identical.jsonl"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rows = json_lines(r.out);
  ASSERT_EQ(rows.size(), 3u);
  const int argmax[] = {0, 2, 1};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i]["eu"].get<double>(), 0.0);
    EXPECT_EQ(rows[i]["eu_gated"].get<double>(), 0.0);
    EXPECT_EQ(rows[i]["epkl"].get<double>(), 0.0);
    EXPECT_EQ(rows[i]["decision"].get<int>(), argmax[i]);
  }
}

TEST(Cli, CsvInputAndOutput) {
  const auto r = run("score --format csv " + data("small.csv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("id,", 0), 0u);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
  const auto d = run("decompose " + data("small.csv"));
  ASSERT_EQ(d.code, 0);
  const auto rows = json_lines(d.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].contains("vgmu"));
  EXPECT_NEAR(rows[0]["tu"].get<double>(),
              rows[0]["au"].get<double>() + rows[0]["eu"].get<double>(), 2e-6);
}

TEST(Cli, InputErrorsExitTwo) {
  const auto bad = run("score " + data("malformed.jsonl"));
  EXPECT_EQ(bad.code, 2);
  const std::string cmd = "'" VGE_CLI_PATH "' score " + data("malformed.jsonl") + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string err;
  char buf[512];
  while (fgets(buf, sizeof buf, pipe)) err += buf;
  pclose(pipe);
  EXPECT_NE(err.find("line 3"), std::string::npos) << err;
  EXPECT_EQ(run("score " + data("empty.jsonl")).code, 2);
  EXPECT_EQ(run("score " + data("ragged.jsonl")).code, 2);
  EXPECT_EQ(run("score " + data("missing.jsonl")).code, 2);
  EXPECT_EQ(run("score --k 1,2 " + data("identical.jsonl")).code, 2);
  EXPECT_EQ(run("nonsense").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST(Cli, CompareIsSymmetricWithUnitDiagonal) {
  const auto path = write_random("compare.jsonl", 500, 3);
  const auto curves = temp_file("curves.csv");
  const auto r = run("compare '" + path.string() + "' --curves '" + curves.string() + "'");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto report = json::parse(r.out);
  const auto names = report["scores"].get<std::vector<std::string>>();
  EXPECT_EQ(names.size(), 5u);
  for (const char* metric : {"spearman", "kendall"}) {
    for (const auto& a : names) {
      EXPECT_NEAR(report[metric][a][a].get<double>(), 1.0, 1e-12);
      for (const auto& b : names) {
        EXPECT_EQ(report[metric][a][b], report[metric][b][a]);
        EXPECT_LE(std::abs(report[metric][a][b].get<double>()), 1.0);
      }
    }
  }
  for (const auto& n : names) {
    const double area = report["aucc"][n].get<double>();
    EXPECT_GE(area, 0.5 - 1.0 / 1000);
    EXPECT_LE(area, 1.0);
  }
  EXPECT_TRUE(report["errors"].empty());
  std::ifstream in(curves);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "score,fraction,cumulative_mass");
  fs::remove(path);
  fs::remove(curves);
}

TEST(Cli, CompareReportsDegenerateColumns) {
  const auto r = run("compare " + data("identical.jsonl"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto report = json::parse(r.out);
  EXPECT_TRUE(report["spearman"]["eu"]["vgmu"].is_null());
  bool found = false;
  for (const auto& e : report["errors"]) found |= e["error"] == "DegenerateVariance";
  EXPECT_TRUE(found);
}

TEST(Cli, OodSanity) {
  const auto id = write_random("id.jsonl", 60, 1);
  const auto same = run("ood '" + id.string() + "' '" + id.string() + "'");
  ASSERT_EQ(same.code, 0) << same.out;
  const auto report = json::parse(same.out);
  for (auto& [name, s] : report["scores"].items()) {
    EXPECT_NEAR(s["auc"].get<double>(), 0.5, 1e-12) << name;
  }
  EXPECT_EQ(run("ood '" + id.string() + "' " + data("identical.jsonl")).code, 2);
  fs::remove(id);
}

TEST(Cli, OutputIndependentOfThreadCount) {
  const auto path = write_random("threads.jsonl", 300, 9);
  const auto one = run("score '" + path.string() + "'", "VGE_THREADS=1");
  const auto four = run("score '" + path.string() + "'", "VGE_THREADS=4");
  ASSERT_EQ(one.code, 0);
  EXPECT_EQ(one.out, four.out);
  fs::remove(path);
}

TEST(Cli, GradcheckAxiomsBenchTrain) {
  const auto g = run("gradcheck --configs 10");
  EXPECT_EQ(g.code, 0);
  EXPECT_TRUE(json::parse(g.out)["passed"].get<bool>());
  EXPECT_EQ(run("gradcheck --configs 5 --tol 1e-300").code, 1);
  const auto a = run("axioms");
  EXPECT_EQ(a.code, 0);
  EXPECT_NE(a.out.find("PASS"), std::string::npos);
  const auto b = run("bench --M 10 --C 10 --samples 4 --reps 1");
  ASSERT_EQ(b.code, 0);
  EXPECT_GT(json::parse(b.out)["ratios"]["epkl_over_vgmu_pipeline"].get<double>(), 0.0);
  const auto gate = temp_file("gate.json");
  const auto t = run("demo-train --epochs 20 --save-gate '" + gate.string() + "'");
  ASSERT_EQ(t.code, 0);
  EXPECT_EQ(t.out.rfind("epoch,loss,accuracy", 0), 0u);
  EXPECT_EQ(run("score --k-file '" + gate.string() + "' " + data("identical.jsonl")).code, 0);
  fs::remove(gate);
}

}  // namespace
}  // namespace vge
