// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: cbml_acceptance [workspace-dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "cbml/workspace.hpp"
#include "helpers.hpp"

using namespace cbml;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Tolerances and runtime limits.
constexpr double kScalerTolerance = 1e-12;
constexpr std::size_t kScalerValues = 10000;
constexpr double kScalerSeconds = 1.0;
constexpr double kGradientTolerance = 1e-5;
constexpr double kGradientSeconds = 5.0;
constexpr double kCompositionTolerance = 1e-9;
constexpr std::size_t kCompositionBundles = 100;
constexpr double kCompositionSeconds = 10.0;
constexpr double kSamplingSeconds = 1.0;
constexpr std::size_t kCartDatasets = 50;
constexpr double kCartSeconds = 30.0;
constexpr double kLinearSensitivityTolerance = 1e-6;
constexpr double kTrainedSensitivityTolerance = 0.05;
constexpr double kSensitivitySeconds = 120.0;
constexpr double kEnvelopeR2 = 0.90;
constexpr double kZoneR2 = 0.75;
constexpr double kWhiteboxSeconds = 20 * 60.0;
constexpr double kSetbackR2 = 0.85;
constexpr double kGeneralizationSeconds = 30 * 60.0;
constexpr double kForecastSeconds = 120.0;

// Independent reference: unscrambled Joe-Kuo points 1..8 of dimensions 1-2.
constexpr double kSobolReference[8][2] = {{0.5, 0.5},     {0.75, 0.25},   {0.25, 0.75},   {0.375, 0.375},
                                          {0.875, 0.875}, {0.625, 0.125}, {0.125, 0.625}, {0.1875, 0.3125}};

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s  %-34s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Runs a check and reports a thrown exception as a failure of that criterion.
void guarded(const std::string& name, const std::function<void()>& check) {
  try {
    check();
  } catch (const std::exception& e) {
    report(false, name, std::string("threw: ") + e.what());
  }
}

void scaler_round_trip() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto space = ParameterSpace::standard();
  Rng rng(1);
  double worst = 0.0;
  for (const auto& r : space.ranges()) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(kScalerValues), 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) = rng.uniform(r.min, r.max);
    const auto s = fit_scaler(x, {{r.name, r.unit}});
    const Eigen::MatrixXd back = s.unscale(s.scale(x));
    worst = std::max(worst, (back - x).cwiseAbs().maxCoeff());
  }
  const double t = seconds_since(t0);
  report(worst <= kScalerTolerance && t < kScalerSeconds, "scaler round-trip",
         fmt("max |error| %.2e over %zu features x %zu values (tol %.0e), %.3f s (limit %.0f s)", worst,
             space.size(), kScalerValues, kScalerTolerance, t, kScalerSeconds));
}

void gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  Network net = Network::random(4, 5, 1, 3);
  Rng rng(2);
  Eigen::MatrixXd x(4, 20), y(1, 20);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform();
  const double l2 = 1e-3;
  const LossGradient lg = loss_and_gradient(net, x, y, l2);
  std::vector<double*> params;
  std::vector<const double*> grads;
  auto collect = [](auto& m, auto& out) {
    for (Eigen::Index i = 0; i < m.size(); ++i) out.push_back(m.data() + i);
  };
  collect(net.hidden_weights, params);
  collect(net.hidden_bias, params);
  collect(net.output_weights, params);
  collect(net.output_bias, params);
  collect(lg.gradient.hidden_weights, grads);
  collect(lg.gradient.hidden_bias, grads);
  collect(lg.gradient.output_weights, grads);
  collect(lg.gradient.output_bias, grads);
  double worst = 0.0;
  const double h = 1e-6;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = *params[k];
    *params[k] = saved + h;
    const double up = loss_and_gradient(net, x, y, l2).loss;
    *params[k] = saved - h;
    const double down = loss_and_gradient(net, x, y, l2).loss;
    *params[k] = saved;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(numeric), std::abs(*grads[k]), 1e-8});
    worst = std::max(worst, std::abs(numeric - *grads[k]) / denom);
  }
  const double t = seconds_since(t0);
  report(worst <= kGradientTolerance && t < kGradientSeconds, "MLP gradient check",
         fmt("max relative error %.2e over %zu parameters, 20 points (tol %.0e), %.3f s (limit %.0f s)", worst,
             params.size(), kGradientTolerance, t, kGradientSeconds));
}

void composition_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(3);
  const auto configs = lhs_samples(ParameterSpace::standard(), kCompositionBundles, 11);
  double worst = 0.0;
  for (std::size_t i = 0; i < kCompositionBundles; ++i) {
    const auto bundle = cbml::testing::affine_bundle(5000 + i, rng.uniform(0.1, 2.0));
    const auto shape = i % 2 ? BuildingShape::setback(rng.uniform(0.3, 0.7)) : BuildingShape::box();
    const auto g = derive_geometry(configs[i], shape.footprint_for(configs[i]));
    const double want = cbml::testing::hand_chained_eui(configs[i], g, bundle);
    const double got = build_graph(configs[i], g, bundle).evaluate().output;
    worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
  }
  const double t = seconds_since(t0);
  report(worst <= kCompositionTolerance && t < kCompositionSeconds, "composition equivalence",
         fmt("max relative difference %.2e over %zu random bundles (tol %.0e), %.3f s (limit %.0f s)", worst,
             kCompositionBundles, kCompositionTolerance, t, kCompositionSeconds));
}

void sampling_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto pts = sobol_unit(2, 8);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t d = 0; d < 2; ++d) mismatches += pts[i][d] != kSobolReference[i][d];
  }
  std::size_t bad_strata = 0;
  for (std::size_t n : {4u, 16u, 300u}) {
    const auto lhs = lhs_unit(ParameterSpace::standard().size(), n, 7);
    for (std::size_t d = 0; d < lhs[0].size(); ++d) {
      std::set<std::size_t> strata;
      for (const auto& p : lhs) strata.insert(static_cast<std::size_t>(std::floor(p[d] * static_cast<double>(n))));
      bad_strata += strata.size() != n;
    }
  }
  const double t = seconds_since(t0);
  report(mismatches == 0 && bad_strata == 0 && t < kSamplingSeconds, "Sobol and LHS correctness",
         fmt("%zu Sobol mismatches in 16 coordinates, %zu unstratified LHS dimensions for n in {4,16,300}, %.3f s "
             "(limit %.0f s)",
             mismatches, bad_strata, t, kSamplingSeconds));
}

void cart_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(4);
  std::size_t disagreements = 0;
  for (std::size_t trial = 0; trial < kCartDatasets; ++trial) {
    const auto rows = static_cast<Eigen::Index>(20 + rng.index(181));
    const auto cols = static_cast<Eigen::Index>(1 + rng.index(5));
    Eigen::MatrixXd x(rows, cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
    if (trial % 4 == 0) x.col(0) = (x.col(0) * 5).array().floor();
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) y[i] = std::sin(4 * x(i, 0)) + x(i, cols - 1) + 0.2 * rng.normal();
    std::vector<Column> names;
    for (Eigen::Index j = 0; j < cols; ++j) names.push_back({"x" + std::to_string(j), "-"});
    const std::size_t min_leaf = 1 + rng.index(10);
    const auto tree = fit_cart(x, y, names, {"y", "-"}, {1, min_leaf});
    Eigen::MatrixXd scaled(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) scaled(i, j) = tree.scale(static_cast<std::size_t>(j), x(i, j));
    }
    const auto brute = brute_force_split(scaled, y, min_leaf);
    const auto& root = tree.nodes[0];
    const bool same = brute ? (!root.leaf && root.feature == brute->feature &&
                               root.threshold_scaled == brute->threshold_scaled)
                            : root.leaf;
    disagreements += !same;
  }
  // Step function at 0.5.
  Eigen::MatrixXd x(200, 1);
  Eigen::VectorXd y(200);
  for (Eigen::Index i = 0; i < 200; ++i) {
    x(i, 0) = rng.uniform();
    y[i] = x(i, 0) > 0.5 ? 1.0 : 0.0;
  }
  const auto step = fit_cart(x, y, {{"x", "-"}}, {"y", "-"}, {1, 1});
  double below = 0.0, above = 1.0;
  for (Eigen::Index i = 0; i < 200; ++i) {
    if (x(i, 0) <= 0.5) below = std::max(below, x(i, 0));
    else above = std::min(above, x(i, 0));
  }
  const double thr = step.nodes[0].threshold;
  const bool step_ok = !step.nodes[0].leaf && thr >= below && thr <= above;
  const double t = seconds_since(t0);
  report(disagreements == 0 && step_ok && t < kCartSeconds, "CART brute-force equivalence",
         fmt("%zu of %zu root splits differ; step threshold %.4f within gap [%.4f, %.4f]; %.3f s (limit %.0f s)",
             disagreements, kCartDatasets, thr, below, above, t, kCartSeconds));
}

// Variables that enter an all-affine composition linearly: they feed
// component inputs directly and leave the geometry untouched.
PerturbationPlan linear_plan(std::uint64_t seed) {
  PerturbationPlan p;
  p.variables = {"u_wall", "u_ground", "u_roof", "u_window", "g_value", "slab_heat_capacity", "permeability",
                 "internal_mass_capacity", "light_gain", "equipment_gain", "boiler_efficiency", "cop_heating",
                 "cop_cooling"};
  p.samples = 300;
  p.seed = seed;
  return p;
}

struct LinearSensitivityResult {
  double worst = 0.0;
  double seconds = 0.0;
};

LinearSensitivityResult linear_sensitivity() {
  const auto t0 = std::chrono::steady_clock::now();
  LinearSensitivityResult r;
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    const auto bundle = cbml::testing::affine_bundle(900 + trial, 0.5);
    const auto plan = linear_plan(40 + trial);
    const DesignEvaluator f = [&](const DesignConfig& c) { return predict_design(c, plan.shape, bundle); };
    const auto m = sensitivities(dse_samples(plan, f));
    const auto col = m.column_index("building.eui");
    for (const auto& v : plan.variables) {
      const double fd = central_difference(plan, f, v, "building.eui");
      const double s = m.raw(m.row_index(v), col);
      r.worst = std::max(r.worst, std::abs(s - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  r.seconds = seconds_since(t0);
  return r;
}

void sensitivity_check(const LinearSensitivityResult& linear, const ModelBundle& trained) {
  const auto t0 = std::chrono::steady_clock::now();
  PerturbationPlan plan;
  const DesignEvaluator f = [&](const DesignConfig& c) { return predict_design(c, plan.shape, trained); };
  const auto m = sensitivities(dse_samples(plan, f));
  const auto col = m.column_index("building.eui");
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& v : plan.variables) ranked.emplace_back(std::abs(m.raw(m.row_index(v), col)), v);
  std::sort(ranked.rbegin(), ranked.rend());
  double worst = 0.0;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const auto& v = ranked[static_cast<std::size_t>(k)].second;
    const double fd = central_difference(plan, f, v, "building.eui");
    const double s = m.raw(m.row_index(v), col);
    const double rel = std::abs(s - fd) / std::abs(fd);
    worst = std::max(worst, rel);
    detail += fmt("%s %.4g vs %.4g; ", v.c_str(), s, fd);
  }
  const double t = linear.seconds + seconds_since(t0);
  report(linear.worst <= kLinearSensitivityTolerance && worst <= kTrainedSensitivityTolerance &&
             t < kSensitivitySeconds,
         "sensitivity exactness",
         fmt("linear max rel %.2e (tol %.0e); trained top-3 max rel %.2f%% (tol %.0f%%): %s%.1f s (limit %.0f s)",
             linear.worst, kLinearSensitivityTolerance, 100 * worst, 100 * kTrainedSensitivityTolerance,
             detail.c_str(), t, kSensitivitySeconds));
}

void whitebox_check(const json& report_json, double pipeline_seconds) {
  bool ok = true;
  std::string detail;
  for (const auto& i : report_json.at("whitebox")) {
    const bool envelope = i.at("envelope").get<bool>();
    const std::string name = i.at("interface").get<std::string>();
    const double r2 = i.at("metrics").at("r2").get<double>();
    if (name == "building.eui") {
      detail += fmt("(%s %.3f) ", name.c_str(), r2);
      continue;
    }
    const double need = envelope ? kEnvelopeR2 : kZoneR2;
    ok = ok && r2 >= need;
    detail += fmt("%s %.3f%s ", name.c_str(), r2, r2 >= need ? "" : fmt("<%.2f", need).c_str());
  }
  ok = ok && pipeline_seconds <= kWhiteboxSeconds;
  report(ok, "white-box interface R2",
         fmt("envelope >= %.2f, zones >= %.2f: %s| pipeline %.0f s (limit %.0f s)", kEnvelopeR2, kZoneR2,
             detail.c_str(), pipeline_seconds, kWhiteboxSeconds));
}

void generalization_check(const json& report_json, double pipeline_seconds) {
  const auto& s = report_json.at("generalization").at("test_setback");
  const double cr2 = s.at("component").at("r2").get<double>();
  const double mr2 = s.at("monolithic").at("r2").get<double>();
  const double cm = s.at("component").at("mape").get<double>();
  const double mm = s.at("monolithic").at("mape").get<double>();
  const bool ok = cr2 >= mr2 && cm <= mm && cr2 >= kSetbackR2 && pipeline_seconds <= kGeneralizationSeconds;
  report(ok, "setback generalization",
         fmt("component R2 %.3f (>= %.2f) MAPE %.2f%% vs monolithic R2 %.3f MAPE %.2f%%; pipeline %.0f s (limit %.0f "
             "s)",
             cr2, kSetbackR2, cm, mr2, mm, pipeline_seconds, kGeneralizationSeconds));
}

void forecast_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto series = synthetic_load_series({});
  const auto r = forecast_holdout(series, {24, LagGranularity::Hours}, {});
  const double t = seconds_since(t0);
  report(r.mape < r.persistence_mape && t < kForecastSeconds, "GBDT beats persistence",
         fmt("holdout MAPE %.3f%% vs 24 h persistence %.3f%% over %zu hours, %.1f s (limit %.0f s)", r.mape,
             r.persistence_mape, r.indices.size(), t, kForecastSeconds));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig reduced_run(const fs::path& ws) {
  RunConfig c;
  c.workspace = ws;
  c.train_samples = 120;
  c.test_samples = 30;
  c.training.hidden_widths = {16};
  c.training.l2_values = {1e-4, 1e-5};
  c.training.max_epochs = 150;
  c.training.patience = 20;
  c.dse_designs = 100;
  return c;
}

void determinism_check(const fs::path& root) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path a = root / "determinism_a";
  const fs::path b = root / "determinism_b";
  for (const auto& ws : {a, b}) {
    fs::remove_all(ws);
    const auto cfg = reduced_run(ws);
    run_gen_data(cfg);
    run_train(cfg);
    run_evaluate(cfg);
  }
  std::size_t differing = 0;
  std::string which;
  for (const char* f : {"data/manifest.json", "models/manifest.json", "reports/manifest.json", "reports/report.json"}) {
    const std::string x = slurp(a / f);
    if (x.empty() || x != slurp(b / f)) {
      ++differing;
      which += std::string(" ") + f;
    }
  }
  report(differing == 0, "determinism",
         fmt("%zu of 4 manifest/report files differ across two reduced-scale runs%s, %.1f s", differing,
             which.c_str(), seconds_since(t0)));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_workspace");
  fs::create_directories(root);

  guarded("scaler round-trip", scaler_round_trip);
  guarded("MLP gradient check", gradient_check);
  guarded("composition equivalence", composition_equivalence);
  guarded("Sobol and LHS correctness", sampling_correctness);
  guarded("CART brute-force equivalence", cart_equivalence);
  guarded("GBDT beats persistence", forecast_check);

  // Full-scale pipeline with default settings for the trained-model criteria.
  LinearSensitivityResult linear;
  guarded("sensitivity exactness (linear)", [&] { linear = linear_sensitivity(); });
  try {
    RunConfig cfg;
    cfg.workspace = root / "full";
    const auto t0 = std::chrono::steady_clock::now();
    run_gen_data(cfg);
    run_train(cfg);
    const json report_json = run_evaluate(cfg);
    const double pipeline = seconds_since(t0);
    guarded("white-box interface R2", [&] { whitebox_check(report_json, pipeline); });
    guarded("setback generalization", [&] { generalization_check(report_json, pipeline); });
    const ModelBundle bundle = load_bundle(cfg.models() / "bundle");
    guarded("sensitivity exactness", [&] { sensitivity_check(linear, bundle); });
  } catch (const std::exception& e) {
    for (const char* name : {"white-box interface R2", "setback generalization", "sensitivity exactness"}) {
      report(false, name, std::string("pipeline threw: ") + e.what());
    }
  }
  guarded("determinism", [&] { determinism_check(root); });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
