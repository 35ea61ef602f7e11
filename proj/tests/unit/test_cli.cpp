#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "test_support.hpp"
#include "twincbr/metrics_report.hpp"

namespace twincbr {
namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = testing::scratch_dir(
        std::string("cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Synthesized blobs plus a model trained on them.
  void prepare_model() {
    ASSERT_EQ(run({"synth", "blobs", "--seed", "3", "--n-per-class", "40", "--out",
                   path("blobs.csv")})
                  .code,
              0);
    ASSERT_EQ(run({"train", "--seed", "3", "--data", path("blobs.csv"), "--epochs", "80",
                   "--out", path("model.json")})
                  .code,
              0);
  }

  std::filesystem::path dir_;
};

TEST_F(CliTest, SynthIsDeterministic) {
  const auto a = run({"synth", "blobs", "--seed", "7", "--out", path("a.csv")});
  const auto b = run({"synth", "blobs", "--seed", "7", "--out", path("b.csv")});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(a.out, path("a.csv") + "\n");
  run({"synth", "blobs", "--seed", "8", "--out", path("c.csv")});
  EXPECT_NE(slurp(path("a.csv")), slurp(path("c.csv")));
}

TEST_F(CliTest, UsageErrorsExitOne) {
  const auto missing = run({"explain", "cf", "--data", "x.csv", "--query-index", "0",
                            "--stdout"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("--model"), std::string::npos) << missing.err;
  EXPECT_EQ(missing.err.find('\n'), missing.err.size() - 1);

  const auto unknown = run({"frobnicate"});
  EXPECT_EQ(unknown.code, 1);
  EXPECT_NE(unknown.err.find("frobnicate"), std::string::npos);

  EXPECT_EQ(run({"synth", "blobs", "--bogus"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"synth", "blobs"}).code, 1);  // nowhere to write
}

TEST_F(CliTest, HelpAndVersionExitZero) {
  const auto help = run({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("explain"), std::string::npos);
  EXPECT_EQ(run({"explain", "cf", "--help"}).code, 0);
  const auto version = run({"--version"});
  EXPECT_EQ(version.code, 0);
  EXPECT_NE(version.out.find(std::string(kReportSchemaVersion)), std::string::npos);
}

TEST_F(CliTest, DataErrorsExitTwo) {
  const auto r = run({"train", "--data", path("absent.csv"), "--stdout"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error"), std::string::npos);
  prepare_model();
  EXPECT_EQ(run({"explain", "cf", "--model", path("model.json"), "--data", path("blobs.csv"),
                 "--query-index", "999", "--stdout"})
                .code,
            2);
}

TEST_F(CliTest, FidelityReportIsAFraction) {
  prepare_model();
  const auto r = run({"eval", "fidelity", "--model", path("model.json"), "--data",
                      path("blobs.csv"), "--k", "3", "--out", path("fid.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = read_report(path("fid.json"));
  const double f = report["fidelity"];
  EXPECT_GE(f, 0.0);
  EXPECT_LE(f, 1.0);
  EXPECT_EQ(report["k"], 3);
  EXPECT_TRUE(report.contains("feature_space_fidelity"));
  EXPECT_EQ(report["provenance"]["config"]["command"], "eval fidelity");
}

TEST_F(CliTest, ExplainCommandsProduceReports) {
  prepare_model();
  const std::string m = path("model.json");
  const std::string d = path("blobs.csv");
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"explain", "factual", "--model", m, "--data", d, "--query-index", "2", "--k", "3"},
           {"explain", "cf", "--model", m, "--data", d, "--query-index", "2"},
           {"explain", "cf", "--method", "wachter", "--model", m, "--data", d,
            "--query-index", "2"},
           {"explain", "sf", "--model", m, "--data", d, "--query-index", "2",
            "--target-class", "1", "--alpha", "0.2"}}) {
    auto full = args;
    full.push_back("--stdout");
    const auto r = run(full);
    EXPECT_TRUE(r.code == 0 || r.code == 2) << r.err;
    if (r.code != 0) continue;  // e.g. query already in the requested class
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc["schema_version"], std::string(kReportSchemaVersion));
    EXPECT_EQ(doc["provenance"]["seed"], 0);
  }
  const auto cf = nlohmann::json::parse(
      run({"explain", "cf", "--model", m, "--data", d, "--query-index", "5", "--stdout"}).out);
  EXPECT_TRUE(cf.contains("metrics"));
}

TEST_F(CliTest, ConfigFileFillsUnsetFlags) {
  prepare_model();
  std::ofstream(path("cfg.json")) << R"({"k": 5, "model": ")" << path("model.json")
                                  << R"(", "unused": 1})";
  const auto from_file = run({"--config", path("cfg.json"), "eval", "fidelity", "--data",
                              path("blobs.csv"), "--stdout"});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_EQ(nlohmann::json::parse(from_file.out)["k"], 5);
  const auto explicit_flag = run({"--config", path("cfg.json"), "eval", "fidelity", "--data",
                                  path("blobs.csv"), "--k", "1", "--stdout"});
  ASSERT_EQ(explicit_flag.code, 0) << explicit_flag.err;
  EXPECT_EQ(nlohmann::json::parse(explicit_flag.out)["k"], 1);

  std::ofstream(path("broken.json")) << "{";
  EXPECT_NE(run({"--config", path("broken.json"), "synth", "blobs", "--stdout"}).code, 0);
}

TEST_F(CliTest, SeriesCounterfactualReport) {
  ASSERT_EQ(run({"synth", "series", "--seed", "2", "--n-per-class", "20", "--length", "24",
                 "--out", path("s.tsv")})
                .code,
            0);
  ASSERT_EQ(run({"train", "--seed", "2", "--data", path("s.tsv"), "--hidden", "10",
                 "--epochs", "60", "--out", path("sm.json")})
                .code,
            0);
  const auto r = run({"explain", "ts-cf", "--model", path("sm.json"), "--data", path("s.tsv"),
                      "--query-index", "1", "--out", path("ts.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = read_report(path("ts.json"));
  EXPECT_EQ(doc["traces"]["query"].size(), 24u);
  EXPECT_EQ(doc["traces"]["counterfactual"].size(), 24u);
  EXPECT_EQ(doc["traces"]["nun"].size(), 24u);
  EXPECT_EQ(doc["traces"]["importance"].size(), 24u);
  EXPECT_LE(doc["window"]["begin"].get<int>(), doc["window"]["end"].get<int>());
}

TEST_F(CliTest, AugmentWritesOnlySyntheticCases) {
  ASSERT_EQ(run({"synth", "imbalanced", "--seed", "1", "--majority", "60", "--minority",
                 "8", "--out", path("imb.csv")})
                .code,
            0);
  const auto r = run({"augment", "--method", "smote", "--data", path("imb.csv"),
                      "--target-class", "outlier", "--count", "10", "--seed", "4",
                      "--out", path("smote.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto synth = parse_tabular_csv(slurp(path("smote.csv")), CsvOptions{});
  EXPECT_EQ(synth.size(), 10u);
  EXPECT_EQ(run({"augment", "--method", "smote", "--data", path("imb.csv"),
                 "--target-class", "nonsense", "--stdout"})
                .code,
            2);

  const auto e = run({"eval", "augment", "--base", path("imb.csv"), "--variants",
                      path("smote.csv"), "--holdout", path("imb.csv"), "--epochs", "20",
                      "--stdout"});
  // Holdout rows are renumbered past the training ids.
  EXPECT_EQ(e.code, 0) << e.err;
}

}  // namespace
}  // namespace twincbr
