#include "cbml/cli.hpp"

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "cbml/service.hpp"
#include "cbml/workspace.hpp"

namespace cbml {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

DesignRequest design_from_file(const std::optional<std::string>& path) {
  if (!path) return {};
  if (!fs::exists(*path)) throw ValidationError("design config not found: " + *path);
  json j;
  try {
    j = json::parse(read_text_file(*path));
  } catch (const json::parse_error& e) {
    throw ValidationError("invalid JSON in " + *path + ": " + e.what());
  }
  return design_request_from_json(j);
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Component-based surrogate models for building energy prediction"};
  app.require_subcommand(1);

  std::optional<std::string> run_config;
  std::optional<std::string> workspace, model_dir, data_dir;
  app.add_option("--run-config", run_config, "JSON run configuration; flags override its values");
  app.add_option("--workspace", workspace, "Workspace directory");
  app.add_option("--model-dir", model_dir, "Model directory (default <workspace>/models)");
  app.add_option("--data-dir", data_dir, "Data directory (default <workspace>/data)");

  std::optional<std::size_t> train_n, test_n;
  std::optional<std::uint64_t> sample_seed;
  auto* gen = app.add_subcommand("gen-data", "Sample designs and simulate them with the reference oracle");
  gen->add_option("--train", train_n, "Sobol training samples");
  gen->add_option("--test", test_n, "LHS samples per test set");
  gen->add_option("--seed", sample_seed, "LHS seed");

  std::optional<std::size_t> max_epochs;
  std::optional<std::uint64_t> train_seed;
  auto* train = app.add_subcommand("train", "Train the component bundle and the monolithic baseline");
  train->add_option("--max-epochs", max_epochs, "Epoch limit per grid point");
  train->add_option("--seed", train_seed, "Training seed");

  auto* evaluate = app.add_subcommand("evaluate", "Generalization, white-box and low-energy reports");

  std::optional<std::string> design;
  bool full_json = false;
  auto* predict = app.add_subcommand("predict", "Predict EUI and interface activations for one design");
  predict->add_option("--config", design, "Design config JSON")->required();
  predict->add_flag("--json", full_json, "Print the full activation trace as JSON");

  std::optional<double> delta;
  std::optional<std::size_t> dse_n;
  std::optional<std::uint64_t> dse_seed;
  auto* sens = app.add_subcommand("sensitivity", "Local sensitivity matrix around a design");
  sens->add_option("--config", design, "Design config JSON (default: representative case)");
  sens->add_option("--delta", delta, "Relative perturbation");
  sens->add_option("--samples", dse_n, "Design-space samples");
  sens->add_option("--seed", dse_seed, "Sampling seed");

  std::string target = "building.eui";
  std::optional<int> depth;
  std::optional<std::size_t> min_leaf;
  std::vector<std::string> leaf_features;
  auto* tree = app.add_subcommand("tree", "Local decision tree and rules for one interface quantity");
  tree->add_option("--config", design, "Design config JSON (default: representative case)");
  tree->add_option("--target", target, "Target as node.output, e.g. window.S.heat_flow");
  tree->add_option("--depth", depth, "Maximum tree depth");
  tree->add_option("--min-leaf", min_leaf, "Minimum samples per leaf");
  tree->add_option("--leaf-features", leaf_features, "Fit per-leaf linear models on these variables")->delimiter(',');
  tree->add_option("--delta", delta, "Relative perturbation");
  tree->add_option("--samples", dse_n, "Design-space samples");
  tree->add_option("--seed", dse_seed, "Sampling seed");

  std::optional<std::string> series;
  std::optional<std::size_t> lags, stages;
  std::optional<std::string> granularity;
  auto* ts = app.add_subcommand("timeseries", "Gradient-boosted forecast of an hourly load series");
  ts->add_option("--series", series, "CSV with a header and one value per row (default: synthetic series)");
  ts->add_option("--lags", lags, "Number of lags");
  ts->add_option("--granularity", granularity, "Lag unit")->check(CLI::IsMember({"hours", "days"}));
  ts->add_option("--stages", stages, "Boosting stages");

  std::optional<int> port;
  std::string host = "127.0.0.1";
  auto* serve_cmd = app.add_subcommand("serve", "Serve the trained bundle over HTTP");
  serve_cmd->add_option("--port", port, "Port");
  serve_cmd->add_option("--host", host, "Listen address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = run_config ? RunConfig::load(*run_config) : RunConfig{};
    if (workspace) cfg.workspace = *workspace;
    if (model_dir) cfg.model_dir = *model_dir;
    if (data_dir) cfg.data_dir = *data_dir;
    if (train_n) cfg.train_samples = *train_n;
    if (test_n) cfg.test_samples = *test_n;
    if (sample_seed) cfg.sample_seed = *sample_seed;
    if (max_epochs) cfg.training.max_epochs = *max_epochs;
    if (train_seed) cfg.training.seed = *train_seed;
    if (delta) cfg.delta = *delta;
    if (dse_n) cfg.dse_samples = *dse_n;
    if (dse_seed) cfg.dse_seed = *dse_seed;
    if (depth) cfg.tree_depth = *depth;
    if (min_leaf) cfg.tree_min_leaf = *min_leaf;
    if (lags) cfg.lags = *lags;
    if (granularity) cfg.lag_granularity = *granularity == "days" ? LagGranularity::Days : LagGranularity::Hours;
    if (stages) cfg.gbdt.stages = *stages;
    if (port) cfg.port = *port;
    cfg.validate();

    if (*gen) {
      const json m = run_gen_data(cfg);
      std::cout << "generated " << m["sets"].dump() << " under " << cfg.data().string() << "\n";
    } else if (*train) {
      const json m = run_train(cfg);
      std::cout << "trained bundle under " << cfg.models().string() << "\nvalidation R2: " << m["validation_r2"].dump()
                << "\n";
    } else if (*evaluate) {
      const json r = run_evaluate(cfg);
      for (const auto& [set, res] : r["generalization"].items()) {
        std::printf("%-13s component R2 %.3f MAPE %.2f%% | monolithic R2 %.3f MAPE %.2f%%\n", set.c_str(),
                    res["component"]["r2"].get<double>(), res["component"]["mape"].get<double>(),
                    res["monolithic"]["r2"].get<double>(), res["monolithic"]["mape"].get<double>());
      }
      for (const auto& i : r["whitebox"]) {
        std::printf("interface %-14s R2 %.3f\n", i["interface"].get<std::string>().c_str(),
                    i["metrics"]["r2"].get<double>());
      }
      std::cout << "reports under " << cfg.reports().string() << "\n";
    } else if (*predict) {
      const json r = run_predict(cfg, design_from_file(design));
      if (full_json) {
        print_json(r);
      } else {
        std::printf("EUI: %.4f %s\nannual energy: %.1f kWh/a\ntop activations:\n", r["eui"].get<double>(),
                    r["eui_unit"].get<std::string>().c_str(), r["annual_energy"].get<double>());
        for (const auto& a : r["top_activations"]) {
          std::printf("  %s.%s = %.4g %s\n", a["node"].get<std::string>().c_str(),
                      a["output"].get<std::string>().c_str(), a["value"].get<double>(),
                      a["unit"].get<std::string>().c_str());
        }
        for (const auto& w : r["warnings"]) std::cout << "warning: " << w["message"].get<std::string>() << "\n";
      }
    } else if (*sens) {
      const json r = run_sensitivity(cfg, design_from_file(design));
      std::cout << "sensitivity matrix: " << r["rows"].size() << " rows x " << r["columns"].size()
                << " outputs, written to " << (cfg.workspace / "sensitivity").string() << "\n";
      for (const auto& w : r["warnings"]) std::cout << "warning: " << w.get<std::string>() << "\n";
    } else if (*tree) {
      const json r = run_tree(cfg, design_from_file(design), target, leaf_features);
      std::cout << r["rules_text"].get<std::string>();
    } else if (*ts) {
      std::optional<fs::path> p;
      if (series) p = *series;
      const json r = run_timeseries(cfg, p);
      std::printf("holdout MAPE %.3f%% (24 h persistence %.3f%%)\n", r["mape"].get<double>(),
                  r["persistence_mape"].get<double>());
      if (!r["advisory"].get<std::string>().empty()) std::cout << "advisory: " << r["advisory"].get<std::string>() << "\n";
    } else if (*serve_cmd) {
      auto bundle = std::make_shared<const ModelBundle>(load_bundle(cfg.models() / "bundle"));
      ServiceOptions o;
      o.default_delta = cfg.delta;
      o.default_samples = cfg.dse_samples;
      o.default_seed = cfg.dse_seed;
      o.default_tree_depth = cfg.tree_depth;
      o.default_min_leaf = cfg.tree_min_leaf;
      DesignService service(bundle, o);
      std::cout << "serving on http://" << host << ":" << cfg.port << std::endl;
      serve(service, host, cfg.port);
    }
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace cbml
