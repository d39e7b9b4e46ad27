#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbml/evaluation.hpp"
#include "cbml/mlp.hpp"
#include "cbml/sensitivity.hpp"
#include "cbml/timeseries.hpp"
#include "cbml/trees.hpp"

namespace cbml {

// Settings shared by every pipeline stage. Loaded from a JSON file; command
// line flags override individual fields afterwards.
struct RunConfig {
  std::filesystem::path workspace = "workspace";
  std::filesystem::path model_dir;  // empty: <workspace>/models
  std::filesystem::path data_dir;   // empty: <workspace>/data

  std::size_t train_samples = 1000;
  std::size_t test_samples = 300;   // per test set
  std::uint64_t sample_seed = 2023; // LHS test sets
  std::string weather = "temperate-default";
  TrainConfig training;

  double delta = 0.05;
  std::size_t dse_samples = 500;
  std::uint64_t dse_seed = 7;
  std::size_t dse_designs = 1000;   // design table for the low-energy comparison
  double low_energy_threshold = 60.0;

  int tree_depth = 3;
  std::size_t tree_min_leaf = 10;

  std::size_t lags = 24;
  LagGranularity lag_granularity = LagGranularity::Hours;
  GbdtOptions gbdt;
  SyntheticLoadOptions series;

  int port = 8080;

  std::filesystem::path models() const;
  std::filesystem::path data() const;
  std::filesystem::path reports() const { return workspace / "reports"; }

  void validate() const;
  nlohmann::json to_json() const;
  // Unknown keys are rejected; missing keys keep the defaults.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
};

// A design given as a flat config object or as {"config": {...}, "shape": {...}}.
struct DesignRequest {
  DesignConfig config;
  BuildingShape shape;
};

DesignRequest design_request_from_json(const nlohmann::json& j);

// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

// Each stage writes its artifacts plus a manifest.json under the workspace
// and returns that manifest.
nlohmann::json run_gen_data(const RunConfig& cfg);
nlohmann::json run_train(const RunConfig& cfg);
nlohmann::json run_evaluate(const RunConfig& cfg);

struct PredictOutput {
  Evaluation evaluation;
  double annual_energy = 0.0;  // kWh/a
  std::vector<Violation> warnings;
  std::size_t node_count = 0;

  // The largest-magnitude level-1 and level-2 activations.
  std::vector<Activation> top_activations(std::size_t n) const;
  nlohmann::json to_json() const;
};

PredictOutput predict_request(const ModelBundle& bundle, const DesignRequest& request);

struct SensitivityRun {
  LocalDataset data;
  SensitivityMatrix matrix;
  ActivityPassivity ap;

  nlohmann::json to_json() const;
};

SensitivityRun sensitivity_analysis(const ModelBundle& bundle, const PerturbationPlan& plan);

struct TreeRun {
  Dataset data;  // variables as features, one target column
  RegressionTree tree;
  RuleSet rules;

  nlohmann::json to_json() const;
};

// Fits a local surrogate tree on design-space samples around the plan's base
// for one "node.output" target. Failed samples are skipped.
TreeRun tree_analysis(const ModelBundle& bundle, const PerturbationPlan& plan, const std::string& target,
                      const CartOptions& options);

PerturbationPlan plan_for(const RunConfig& cfg, const DesignRequest& base);

nlohmann::json run_predict(const RunConfig& cfg, const DesignRequest& request);
nlohmann::json run_sensitivity(const RunConfig& cfg, const DesignRequest& base);
nlohmann::json run_tree(const RunConfig& cfg, const DesignRequest& base, const std::string& target,
                        const std::vector<std::string>& leaf_features);
// Uses the synthetic series unless a CSV path ("timestamp-free", one value
// per line after a header) is given.
nlohmann::json run_timeseries(const RunConfig& cfg, const std::optional<std::filesystem::path>& series_csv);

TimeSeries read_series_csv(const std::filesystem::path& path);

}  // namespace cbml
