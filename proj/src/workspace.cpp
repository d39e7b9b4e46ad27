#include "cbml/workspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cbml/baseline.hpp"
#include "cbml/svg.hpp"

namespace cbml {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kTestSets[] = {"test_box", "test_shapes", "test_setback"};

std::string granularity_name(LagGranularity g) { return g == LagGranularity::Days ? "days" : "hours"; }

LagGranularity granularity_from(const std::string& s) {
  if (s == "hours") return LagGranularity::Hours;
  if (s == "days") return LagGranularity::Days;
  throw ValidationError("lag_granularity must be 'hours' or 'days', got '" + s + "'");
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config field '") + key + "' has the wrong type");
  }
}

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

// Manifest of a stage directory: every listed file with its digest.
json manifest_for(const fs::path& dir, const std::vector<std::string>& files, json extra) {
  json digests = json::object();
  for (const auto& f : files) digests[f] = file_digest(dir / f);
  extra["files"] = digests;
  return extra;
}

std::vector<SampleRecord> load_set(const fs::path& data, const std::string& set) {
  const fs::path dir = data / set;
  if (!fs::exists(dir)) {
    throw PrerequisiteError("missing sample set '" + set + "' in " + data.string() +
                            "; run the 'gen-data' subcommand first");
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SampleRecord> out(files.size());
  parallel_for(files.size(), [&](std::size_t i) { out[i] = sample_from_json(read_json(files[i])); });
  return out;
}

void require_data(const RunConfig& cfg) {
  if (!fs::exists(cfg.data() / "manifest.json")) {
    throw PrerequisiteError("no generated data under " + cfg.data().string() + "; run the 'gen-data' subcommand first");
  }
}

std::shared_ptr<MlpModel> load_monolithic(const RunConfig& cfg) {
  const fs::path p = cfg.models() / "monolithic.json";
  if (!fs::exists(p)) throw PrerequisiteError("no monolithic model at " + p.string() + "; run the 'train' subcommand first");
  return std::make_shared<MlpModel>(MlpModel::from_json(read_json(p)));
}

std::string designs_csv(const std::vector<DesignSample>& designs) {
  std::ostringstream out;
  out << "id";
  for (const auto& f : config_fields()) out << "," << f.name << " [" << f.unit << "]";
  out << "\n";
  for (const auto& d : designs) {
    out << d.id;
    for (const auto& f : config_fields()) out << "," << format_double(get_field(d.config, f.name));
    out << "\n";
  }
  return out.str();
}

}  // namespace

fs::path RunConfig::models() const { return model_dir.empty() ? workspace / "models" : model_dir; }
fs::path RunConfig::data() const { return data_dir.empty() ? workspace / "data" : data_dir; }

void RunConfig::validate() const {
  if (workspace.empty()) throw ValidationError("workspace path is empty");
  if (train_samples < 1 || test_samples < 1) throw ValidationError("sample counts must be at least 1");
  if (train_samples > SobolSequence::kMaxPoints) throw ValidationError("train_samples exceeds the Sobol limit");
  if (dse_samples < 1 || dse_designs < 1) throw ValidationError("dse counts must be at least 1");
  if (!(delta >= 0.0 && delta <= 0.2)) throw ValidationError("delta must lie in [0, 0.2]");
  if (tree_depth < 0) throw ValidationError("tree_depth must be non-negative");
  if (tree_min_leaf < 1) throw ValidationError("tree_min_leaf must be at least 1");
  if (lags < 1) throw ValidationError("lags must be at least 1");
  if (port < 0 || port > 65535) throw ValidationError("port must lie in [0, 65535]");
  if (gbdt.min_leaf < 1 || gbdt.max_depth < 0 || !(gbdt.learning_rate > 0.0)) {
    throw ValidationError("invalid gbdt options");
  }
  training.validate();
}

json RunConfig::to_json() const {
  return {{"workspace", workspace.string()},
          {"model_dir", model_dir.string()},
          {"data_dir", data_dir.string()},
          {"train_samples", train_samples},
          {"test_samples", test_samples},
          {"sample_seed", sample_seed},
          {"weather", weather},
          {"training", training.to_json()},
          {"delta", delta},
          {"dse_samples", dse_samples},
          {"dse_seed", dse_seed},
          {"dse_designs", dse_designs},
          {"low_energy_threshold", low_energy_threshold},
          {"tree_depth", tree_depth},
          {"tree_min_leaf", tree_min_leaf},
          {"lags", lags},
          {"lag_granularity", granularity_name(lag_granularity)},
          {"gbdt",
           {{"stages", gbdt.stages},
            {"max_depth", gbdt.max_depth},
            {"learning_rate", gbdt.learning_rate},
            {"min_leaf", gbdt.min_leaf}}},
          {"series", {{"hours", series.hours}, {"seed", series.seed}, {"start_year", series.start_year}}},
          {"port", port}};
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("run config must be a JSON object");
  static const std::set<std::string> known = {
      "workspace",   "model_dir",  "data_dir", "train_samples",        "test_samples", "sample_seed",
      "weather",     "training",   "delta",    "dse_samples",          "dse_seed",     "dse_designs",
      "low_energy_threshold",      "tree_depth", "tree_min_leaf",      "lags",         "lag_granularity",
      "gbdt",        "series",     "port"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw ValidationError("unknown run config field '" + it.key() + "'");
  }
  RunConfig c;
  std::string s;
  if (j.contains("workspace")) take(j, "workspace", s), c.workspace = s;
  if (j.contains("model_dir")) take(j, "model_dir", s), c.model_dir = s;
  if (j.contains("data_dir")) take(j, "data_dir", s), c.data_dir = s;
  take(j, "train_samples", c.train_samples);
  take(j, "test_samples", c.test_samples);
  take(j, "sample_seed", c.sample_seed);
  take(j, "weather", c.weather);
  if (j.contains("training")) c.training = TrainConfig::from_json(j["training"]);
  take(j, "delta", c.delta);
  take(j, "dse_samples", c.dse_samples);
  take(j, "dse_seed", c.dse_seed);
  take(j, "dse_designs", c.dse_designs);
  take(j, "low_energy_threshold", c.low_energy_threshold);
  take(j, "tree_depth", c.tree_depth);
  take(j, "tree_min_leaf", c.tree_min_leaf);
  take(j, "lags", c.lags);
  if (j.contains("lag_granularity")) take(j, "lag_granularity", s), c.lag_granularity = granularity_from(s);
  if (j.contains("gbdt")) {
    const json& g = j["gbdt"];
    take(g, "stages", c.gbdt.stages);
    take(g, "max_depth", c.gbdt.max_depth);
    take(g, "learning_rate", c.gbdt.learning_rate);
    take(g, "min_leaf", c.gbdt.min_leaf);
  }
  if (j.contains("series")) {
    const json& g = j["series"];
    take(g, "hours", c.series.hours);
    take(g, "seed", c.series.seed);
    take(g, "start_year", c.series.start_year);
  }
  take(j, "port", c.port);
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("run config not found: " + path.string());
  return from_json(read_json(path));
}

DesignRequest design_request_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("design must be a JSON object");
  DesignRequest r;
  if (j.contains("config")) {
    r.config = config_from_json(j["config"]);
    if (j.contains("shape")) r.shape = shape_from_json(j["shape"]);
  } else {
    r.config = config_from_json(j);
  }
  check_config(r.config);
  return r;
}

std::string file_digest(const fs::path& path) {
  const std::string bytes = read_text_file(path);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json run_gen_data(const RunConfig& cfg) {
  cfg.validate();
  const fs::path data = cfg.data();
  const WeatherSeries weather = synth_weather(cfg.weather);
  const std::pair<std::string, std::vector<DesignSample>> sets[] = {
      {"train", training_designs(cfg.train_samples)},
      {"test_box", [&] {
         std::vector<DesignSample> out;
         std::size_t i = 0;
         for (const auto& c : lhs_samples(ParameterSpace::standard(), cfg.test_samples, cfg.sample_seed)) {
           char id[32];
           std::snprintf(id, sizeof id, "box-%04zu", i++);
           out.push_back({id, c, Footprint::box(c.length, c.width, c.num_floors)});
         }
         return out;
       }()},
      {"test_shapes", random_shape_designs(cfg.test_samples, cfg.sample_seed + 1)},
      {"test_setback", setback_designs(cfg.test_samples, cfg.sample_seed + 2)},
  };
  std::vector<std::string> files;
  json counts = json::object();
  for (const auto& [name, designs] : sets) {
    const auto records = simulate_designs(designs, weather);
    fs::remove_all(data / name);
    fs::create_directories(data / name);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const std::string file = name + "/" + records[i].id + ".json";
      write_text_file(data / file, sample_to_json(records[i], designs[i].footprint).dump() + "\n");
      files.push_back(file);
    }
    write_text_file(data / (name + "_designs.csv"), designs_csv(designs));
    files.push_back(name + "_designs.csv");
    counts[name] = records.size();
  }
  json m = manifest_for(data, files,
                        {{"format", "cbml-data/1"},
                         {"weather", cfg.weather},
                         {"sets", counts},
                         {"schemes",
                          {{"train", "sobol, box"},
                           {"test_box", "lhs, box"},
                           {"test_shapes", "lhs, random rectilinear footprint"},
                           {"test_setback", "lhs, 4 floors, top floor half width"}}},
                         {"sample_seed", cfg.sample_seed}});
  write_json(data / "manifest.json", m);
  return m;
}

json run_train(const RunConfig& cfg) {
  cfg.validate();
  require_data(cfg);
  const json data_manifest = read_json(cfg.data() / "manifest.json");
  const auto samples = load_set(cfg.data(), "train");
  if (samples.empty()) throw PrerequisiteError("training set is empty; run the 'gen-data' subcommand first");

  const fs::path models = cfg.models();
  fs::create_directories(models / "datasets");
  const auto datasets = extract_component_datasets(samples);
  std::vector<std::string> files;
  for (const auto& [kind, d] : datasets) {
    const std::string file = "datasets/" + std::string(to_string(kind)) + ".csv";
    write_text_file(models / file, dataset_to_csv(d));
    files.push_back(file);
  }

  ModelBundle bundle = train_bundle(datasets, cfg.training);
  bundle.provenance["sample_plan"] = {{"train_samples", samples.size()},
                                      {"scheme", "sobol"},
                                      {"weather", data_manifest.value("weather", cfg.weather)},
                                      {"data_manifest", file_digest(cfg.data() / "manifest.json")}};
  save_bundle(bundle, models / "bundle");
  files.push_back("bundle/manifest.json");
  for (auto k : kComponentKinds) files.push_back("bundle/" + std::string(to_string(k)) + ".json");

  const MlpModel mono = train_monolithic(samples, cfg.training);
  write_text_file(models / "monolithic.json", mono.to_json().dump() + "\n");
  files.push_back("monolithic.json");

  json validation = json::object();
  for (auto k : kComponentKinds) {
    const auto* m = dynamic_cast<const MlpModel*>(&bundle.model(k));
    validation[std::string(to_string(k))] = m->report().validation_r2;
  }
  validation["monolithic"] = mono.report().validation_r2;
  json m = manifest_for(models, files,
                        {{"format", "cbml-models/1"},
                         {"train_config", cfg.training.to_json()},
                         {"train_samples", samples.size()},
                         {"validation_r2", validation}});
  write_json(models / "manifest.json", m);
  return m;
}

json run_evaluate(const RunConfig& cfg) {
  cfg.validate();
  require_data(cfg);
  const ModelBundle bundle = load_bundle(cfg.models() / "bundle");
  const auto mono = load_monolithic(cfg);
  const fs::path out = cfg.reports();
  fs::create_directories(out);
  std::vector<std::string> files;
  auto emit = [&](const std::string& file, const std::string& text) {
    write_text_file(out / file, text);
    files.push_back(file);
  };

  json generalization = json::object();
  std::vector<SampleRecord> box_samples;
  for (const char* set : kTestSets) {
    auto samples = load_set(cfg.data(), set);
    const TestSetResult r = evaluate_test_set(set, samples, bundle, *mono);
    generalization[set] = r.to_json();
    emit(std::string(set) + "_predictions.csv", r.to_csv());
    std::vector<double> truth;
    std::vector<double> comp;
    std::vector<double> monov;
    for (const auto& row : r.rows) {
      truth.push_back(row.truth);
      comp.push_back(row.component);
      monov.push_back(row.monolithic);
    }
    emit(std::string(set) + "_scatter.svg",
         scatter_svg(std::string("EUI on ") + set, "simulated EUI [kWh/m2a]", "predicted EUI [kWh/m2a]",
                     {{"component-based", truth, comp}, {"monolithic", truth, monov}}));
    if (std::string(set) == "test_box") box_samples = std::move(samples);
  }

  const WhiteboxReport wb = whitebox_interface_test(bundle, box_samples);
  for (const auto& s : wb.interfaces) {
    emit("whitebox_" + s.name + ".svg",
         scatter_svg("Interface " + s.name, "oracle [" + s.unit + "]", "composed model [" + s.unit + "]",
                     {{s.name, s.truth, s.predicted}}));
  }
  emit("whitebox_points.json", wb.to_json(true).dump() + "\n");

  const auto designs = lhs_samples(ParameterSpace::standard(), cfg.dse_designs, cfg.sample_seed + 3);
  const DesignTable table = design_table(designs, BuildingShape::box(), bundle);
  const DistributionComparison cmp = low_energy_compare(table, cfg.low_energy_threshold);
  for (std::size_t c = 0; c < cmp.columns.size(); ++c) {
    std::vector<HistogramSeries> series{{"all designs", cmp.full[c].histogram}};
    if (!cmp.empty_subset) series.push_back({"EUI below threshold", cmp.low[c].histogram});
    emit("low_energy_" + cmp.columns[c].name + ".svg",
         histogram_svg(cmp.columns[c].name, cmp.columns[c].name + " [" + cmp.columns[c].unit + "]", cmp.edges[c],
                       series));
  }

  const json report = {{"format", "cbml-report/1"},
                       {"provenance",
                        {{"models", file_digest(cfg.models() / "manifest.json")},
                         {"data", file_digest(cfg.data() / "manifest.json")},
                         {"dse_seed", cfg.sample_seed + 3},
                         {"dse_designs", cfg.dse_designs}}},
                       {"generalization", generalization},
                       {"whitebox", wb.to_json()},
                       {"low_energy", cmp.to_json()}};
  emit("report.json", report.dump(2) + "\n");
  json m = manifest_for(out, files, {{"format", "cbml-reports/1"}});
  write_json(out / "manifest.json", m);
  return report;
}

std::vector<Activation> PredictOutput::top_activations(std::size_t n) const {
  std::vector<Activation> acts;
  for (const auto& a : evaluation.trace) {
    if (a.node == "building") continue;
    acts.push_back(a);
  }
  std::stable_sort(acts.begin(), acts.end(),
                   [](const Activation& a, const Activation& b) { return std::abs(a.value) > std::abs(b.value); });
  if (acts.size() > n) acts.resize(n);
  return acts;
}

json PredictOutput::to_json() const {
  json acts = json::array();
  for (const auto& a : evaluation.trace) {
    acts.push_back({{"node", a.node}, {"output", a.output}, {"value", a.value}, {"unit", a.unit}});
  }
  json warns = json::array();
  for (const auto& w : warnings) {
    warns.push_back({{"field", w.field}, {"value", w.value}, {"min", w.min}, {"max", w.max}, {"message", w.message}});
  }
  return {{"eui", evaluation.output},
          {"eui_unit", evaluation.unit},
          {"annual_energy", annual_energy},
          {"annual_energy_unit", "kWh/a"},
          {"node_count", node_count},
          {"activations", acts},
          {"warnings", warns}};
}

PredictOutput predict_request(const ModelBundle& bundle, const DesignRequest& request) {
  PredictOutput out;
  const GeometrySummary g = derive_geometry(request.config, request.shape.footprint_for(request.config));
  const CompositionGraph graph = build_graph(request.config, g, bundle);
  out.evaluation = graph.evaluate();
  out.node_count = graph.nodes().size();
  out.annual_energy = out.evaluation.output * g.total_floor_area;
  out.warnings = validate_config(request.config, ParameterSpace::standard());
  return out;
}

json SensitivityRun::to_json() const {
  json j = matrix.to_json();
  json act = json::object();
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) act[matrix.rows[i].name] = ap.activity[i];
  json pas = json::object();
  for (std::size_t i = 0; i < matrix.columns.size(); ++i) pas[matrix.columns[i].name] = ap.passivity[i];
  j["activity"] = act;
  j["passivity"] = pas;
  j["samples"] = data.size();
  j["failures"] = data.failures;
  return j;
}

SensitivityRun sensitivity_analysis(const ModelBundle& bundle, const PerturbationPlan& plan) {
  SensitivityRun r;
  r.data = dse_samples(plan, bundle);
  r.matrix = sensitivities(r.data);
  r.ap = activity_passivity(r.matrix.standardized);
  return r;
}

json TreeRun::to_json() const {
  return {{"tree", tree.to_json()}, {"rules", rules.to_json()}, {"rules_text", rules.to_text(tree)},
          {"samples", data.rows()}};
}

TreeRun tree_analysis(const ModelBundle& bundle, const PerturbationPlan& plan, const std::string& target,
                      const CartOptions& options) {
  plan.validate();
  TreeRun r;
  const LocalDataset local = dse_samples(plan, bundle);
  const std::size_t col = local.output_index(target);
  if (col == static_cast<std::size_t>(-1)) {
    throw ValidationError("unknown target '" + target + "'; expected a node.output name such as building.eui");
  }
  r.data = Dataset(local.variables, {local.outputs[col]});
  for (std::size_t i = 0; i < local.size(); ++i) {
    const double y = local.values[i][col];
    if (!std::isfinite(y)) continue;
    r.data.append(local.inputs[i], std::span<const double>(&y, 1), std::to_string(i));
  }
  r.tree = fit_cart(r.data, options);
  r.rules = extract_rules(r.tree);
  return r;
}

PerturbationPlan plan_for(const RunConfig& cfg, const DesignRequest& base) {
  PerturbationPlan p;
  p.base = base.config;
  p.shape = base.shape;
  p.delta = cfg.delta;
  p.samples = cfg.dse_samples;
  p.seed = cfg.dse_seed;
  return p;
}

json run_predict(const RunConfig& cfg, const DesignRequest& request) {
  const ModelBundle bundle = load_bundle(cfg.models() / "bundle");
  const PredictOutput out = predict_request(bundle, request);
  json j = out.to_json();
  json top = json::array();
  for (const auto& a : out.top_activations(5)) {
    top.push_back({{"node", a.node}, {"output", a.output}, {"value", a.value}, {"unit", a.unit}});
  }
  j["top_activations"] = top;
  return j;
}

json run_sensitivity(const RunConfig& cfg, const DesignRequest& base) {
  cfg.validate();
  const ModelBundle bundle = load_bundle(cfg.models() / "bundle");
  const SensitivityRun r = sensitivity_analysis(bundle, plan_for(cfg, base));
  const fs::path out = cfg.workspace / "sensitivity";
  fs::create_directories(out);
  write_text_file(out / "matrix.csv", r.matrix.to_csv());
  write_json(out / "matrix.json", r.to_json());
  json m = manifest_for(out, {"matrix.csv", "matrix.json"},
                        {{"format", "cbml-sensitivity/1"}, {"delta", cfg.delta}, {"samples", cfg.dse_samples},
                         {"seed", cfg.dse_seed}});
  write_json(out / "manifest.json", m);
  return r.to_json();
}

json run_tree(const RunConfig& cfg, const DesignRequest& base, const std::string& target,
              const std::vector<std::string>& leaf_features) {
  cfg.validate();
  const ModelBundle bundle = load_bundle(cfg.models() / "bundle");
  const TreeRun r = tree_analysis(bundle, plan_for(cfg, base), target, {cfg.tree_depth, cfg.tree_min_leaf});
  json j = r.to_json();
  if (!leaf_features.empty()) {
    json leaves = json::array();
    for (int leaf : r.tree.leaves()) {
      try {
        leaves.push_back(leaf_linear_model(r.tree, leaf, r.data, leaf_features).to_json());
      } catch (const ValidationError& e) {
        leaves.push_back({{"leaf", leaf}, {"error", e.what()}});
      }
    }
    j["leaf_models"] = leaves;
  }
  const fs::path out = cfg.workspace / "tree";
  fs::create_directories(out);
  write_json(out / "tree.json", j);
  write_text_file(out / "rules.txt", r.rules.to_text(r.tree));
  json m = manifest_for(out, {"tree.json", "rules.txt"},
                        {{"format", "cbml-tree/1"}, {"target", target}, {"max_depth", cfg.tree_depth},
                         {"min_leaf", cfg.tree_min_leaf}});
  write_json(out / "manifest.json", m);
  return j;
}

TimeSeries read_series_csv(const fs::path& path) {
  const auto rows = read_csv(path);
  if (rows.size() < 2) throw ValidationError("series file " + path.string() + " has no data rows");
  TimeSeries s;
  s.start = std::chrono::sys_days{std::chrono::year{2023} / std::chrono::January / 1};
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    s.values.push_back(parse_double(rows[i].back()));
  }
  return s;
}

json run_timeseries(const RunConfig& cfg, const std::optional<fs::path>& series_csv) {
  cfg.validate();
  const TimeSeries series = series_csv ? read_series_csv(*series_csv) : synthetic_load_series(cfg.series);
  LagFeatureSpec spec;
  spec.lags = cfg.lags;
  spec.granularity = cfg.lag_granularity;
  const ForecastResult r = forecast_holdout(series, spec, cfg.gbdt);
  const fs::path out = cfg.workspace / "timeseries";
  fs::create_directories(out);
  write_text_file(out / "model.json", r.model.to_json().dump() + "\n");
  write_text_file(out / "forecast.csv", r.to_csv(series));
  json summary = r.summary();
  summary["lags"] = spec.lags;
  summary["lag_granularity"] = granularity_name(spec.granularity);
  summary["advisory"] = spec.advisory();
  summary["source"] = series_csv ? series_csv->string() : std::string("synthetic");
  write_json(out / "summary.json", summary);
  write_json(out / "manifest.json",
             manifest_for(out, {"model.json", "forecast.csv", "summary.json"}, {{"format", "cbml-timeseries/1"}}));
  return summary;
}

}  // namespace cbml
