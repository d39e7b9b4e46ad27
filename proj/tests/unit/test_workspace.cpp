#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cbml/cli.hpp"
#include "cbml/workspace.hpp"

using namespace cbml;
namespace fs = std::filesystem;

namespace {

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cbml");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cbml_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig small_run(const fs::path& workspace) {
  RunConfig c;
  c.workspace = workspace;
  c.train_samples = 64;
  c.test_samples = 12;
  c.training.hidden_widths = {8};
  c.training.l2_values = {1e-4};
  c.training.max_epochs = 30;
  c.training.patience = 10;
  c.dse_samples = 60;
  c.dse_designs = 40;
  return c;
}

}  // namespace

TEST(RunConfigJson, RoundTripAndUnknownKeys) {
  auto c = small_run("ws");
  c.lag_granularity = LagGranularity::Days;
  c.lags = 5;
  const auto back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_THROW(RunConfig::from_json({{"trian_samples", 10}}), ValidationError);
  EXPECT_EQ(RunConfig::from_json(nlohmann::json::object()).to_json(), RunConfig{}.to_json());
  auto bad = c;
  bad.delta = 0.5;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli({"--help"}), 0);
  EXPECT_EQ(cli({"no-such-command"}), 2);
  EXPECT_EQ(cli({"sensitivity", "--delta", "0.9"}), 2);
  const auto ws = scratch("cli_missing");
  // Missing prerequisites are not validation errors.
  EXPECT_EQ(cli({"--workspace", ws.string(), "train"}), 3);
  EXPECT_EQ(cli({"--workspace", ws.string(), "--run-config", (ws / "absent.json").string(), "train"}), 2);
}

TEST(Cli, TimeseriesRunsOnTheSyntheticSeries) {
  const auto ws = scratch("cli_timeseries");
  EXPECT_EQ(cli({"--workspace", ws.string(), "timeseries", "--stages", "40"}), 0);
  EXPECT_TRUE(fs::exists(ws / "timeseries" / "forecast.csv"));
  EXPECT_TRUE(fs::exists(ws / "timeseries" / "manifest.json"));
  fs::remove_all(ws);
}

TEST(Pipeline, SmallRunIsReproducible) {
  const auto a = scratch("pipeline_a");
  const auto b = scratch("pipeline_b");
  for (const auto& ws : {a, b}) {
    const auto cfg = small_run(ws);
    run_gen_data(cfg);
    run_train(cfg);
    run_evaluate(cfg);
  }
  for (const char* f : {"data/manifest.json", "models/manifest.json", "reports/manifest.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const auto report = nlohmann::json::parse(slurp(a / "reports" / "manifest.json"));
  EXPECT_FALSE(report.at("files").empty());

  // Downstream commands work on the trained workspace.
  auto cfg = small_run(a);
  const auto p = run_predict(cfg, DesignRequest{});
  EXPECT_TRUE(std::isfinite(p.at("eui").get<double>()));
  EXPECT_EQ(cli({"--workspace", a.string(), "tree", "--samples", "300", "--min-leaf", "5"}), 0);
  fs::remove_all(a);
  fs::remove_all(b);
}
