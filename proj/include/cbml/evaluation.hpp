#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbml/baseline.hpp"
#include "cbml/components.hpp"
#include "cbml/composition.hpp"
#include "cbml/metrics.hpp"
#include "cbml/sampling.hpp"
#include "cbml/util.hpp"

namespace cbml {

// A design to simulate: parameters plus the footprint they apply to.
struct DesignSample {
  std::string id;
  DesignConfig config;
  Footprint footprint;
};

// Box-shaped Sobol samples over the standard space.
std::vector<DesignSample> training_designs(std::size_t count);

// Rectilinear outline built from 2-3 overlapping grid rectangles, traced
// counter-clockwise and scaled to the requested area. Plain rectangles and
// outlines that touch themselves at a corner are rejected and redrawn.
std::vector<Point2> random_rectilinear_outline(Rng& rng, double area);

// LHS over the random-shape space; every floor shares one random outline.
std::vector<DesignSample> random_shape_designs(std::size_t count, std::uint64_t seed);

// LHS over the standard space with four floors and a top floor of half the
// width, which puts part of the roof at an intermediate level.
std::vector<DesignSample> setback_designs(std::size_t count, std::uint64_t seed);

std::vector<SampleRecord> simulate_designs(const std::vector<DesignSample>& designs, const WeatherSeries& weather);

nlohmann::json sample_to_json(const SampleRecord& s, const Footprint& footprint);
SampleRecord sample_from_json(const nlohmann::json& j);

struct PredictionRow {
  std::string id;
  double truth = 0.0;       // oracle EUI, kWh/m2a
  double component = 0.0;   // composed model
  double monolithic = 0.0;
};

struct TestSetResult {
  std::string name;
  std::vector<PredictionRow> rows;
  Metrics component;
  Metrics monolithic;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// Both models are compared on EUI; the monolithic annual energy is divided by
// the total floor area.
TestSetResult evaluate_test_set(const std::string& name, const std::vector<SampleRecord>& samples,
                                const ModelBundle& bundle, const MlpModel& monolithic);

struct InterfaceSeries {
  std::string name;  // "wall", "window", ..., "zone.heating", "building.eui"
  std::string unit;
  bool envelope = false;
  std::vector<double> truth;
  std::vector<double> predicted;
  Metrics metrics;
};

struct WhiteboxReport {
  std::vector<InterfaceSeries> interfaces;

  const InterfaceSeries& at(std::string_view name) const;
  nlohmann::json to_json(bool include_points = false) const;
};

// Compares composed-graph activations with oracle interface values: element
// flows pooled per component kind, zone loads, and EUI.
WhiteboxReport whitebox_interface_test(const ModelBundle& bundle, const std::vector<SampleRecord>& samples);

struct DistributionSummary {
  std::string name;
  std::string unit;
  std::vector<double> quantiles;  // at kQuantileLevels
  double mean = 0.0;
  std::vector<std::size_t> histogram;
};

inline constexpr double kQuantileLevels[] = {0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0};

struct DistributionComparison {
  double threshold = 60.0;
  std::size_t total = 0;
  std::size_t selected = 0;
  bool empty_subset = false;
  std::vector<Column> columns;
  std::vector<std::vector<double>> edges;  // per column, shared by both subsets
  std::vector<DistributionSummary> full;
  std::vector<DistributionSummary> low;    // empty when the subset is empty

  nlohmann::json to_json() const;
};

// Columns of a design-space table: the sampled variables, then interface
// activations (per-kind flow sums, zone loads, intensities).
struct DesignTable {
  std::vector<Column> columns;
  std::vector<std::vector<double>> rows;
  std::vector<double> eui;
};

DesignTable design_table(const std::vector<DesignConfig>& configs, const BuildingShape& shape,
                         const ModelBundle& bundle);

// Splits at EUI < threshold and summarizes both subsets with quantiles and
// histograms over common bin edges.
DistributionComparison low_energy_compare(const DesignTable& table, double threshold = 60.0, std::size_t bins = 10);

}  // namespace cbml
