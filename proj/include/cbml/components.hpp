#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cbml/dataset.hpp"
#include "cbml/geometry.hpp"
#include "cbml/mlp.hpp"
#include "cbml/oracle.hpp"
#include "cbml/regressor.hpp"

namespace cbml {

// Model instances of the hierarchy. Floor and Roof share one schema but are
// trained separately.
enum class ComponentKind {
  Wall,
  Window,
  Floor,
  Roof,
  Infiltration,
  ZoneHeating,
  ZoneCooling,
  ZoneLighting,
  BuildingEnergy,
};

inline constexpr std::array<ComponentKind, 9> kComponentKinds{
    ComponentKind::Wall,        ComponentKind::Window,      ComponentKind::Floor,
    ComponentKind::Roof,        ComponentKind::Infiltration, ComponentKind::ZoneHeating,
    ComponentKind::ZoneCooling, ComponentKind::ZoneLighting, ComponentKind::BuildingEnergy};

std::string_view to_string(ComponentKind k);
ComponentKind component_kind_from_string(std::string_view name);
int level(ComponentKind k);

namespace units {
inline constexpr const char* kAverageFlow = "W_avg";
inline constexpr const char* kLoad = "W";
inline constexpr const char* kIntensityLoad = "W/m2";
inline constexpr const char* kEui = "kWh/m2a";
}  // namespace units

struct ComponentSchema {
  ComponentKind kind = ComponentKind::Wall;
  std::string table_row;  // shared row name, e.g. "floor_roof"
  std::vector<Column> inputs;
  std::vector<Column> outputs;

  nlohmann::json to_json() const;
};

const ComponentSchema& schema(ComponentKind k);

// One simulated design: everything extraction and evaluation need.
struct SampleRecord {
  std::string id;
  DesignConfig config;
  GeometrySummary geometry;
  PointSummary summary;
};

SampleRecord simulate_sample(std::string id, const DesignConfig& config, const Footprint& footprint,
                             const WeatherSeries& weather);

// Level-1 input rows of one design, shared by extraction and graph building.
struct ElementInstance {
  std::string id;  // oracle element id and graph node id
  ComponentKind kind = ComponentKind::Wall;
  std::vector<double> inputs;
  std::vector<std::string> sources;  // where each input comes from, e.g. "config.u_wall"
};

std::vector<ElementInstance> element_instances(const DesignConfig& config, const GeometrySummary& geometry);

// Static (non-flow) inputs of the level-2 and level-3 rows.
std::vector<double> zone_load_statics(const DesignConfig& config, const GeometrySummary& geometry);
std::vector<double> zone_lighting_inputs(const DesignConfig& config, const GeometrySummary& geometry);
// Annual-mean load per floor area of a load averaged over occupied hours.
double load_intensity(double occupied_mean_load, double floor_area, double operating_hours);

using ComponentDatasets = std::map<ComponentKind, Dataset>;

// Throws ExtractionError naming the sample and field when the oracle summary
// lacks an element the geometry requires.
ComponentDatasets extract_component_datasets(const std::vector<SampleRecord>& samples);

struct ModelBundle {
  std::map<ComponentKind, std::shared_ptr<const Regressor>> models;
  nlohmann::json provenance = nlohmann::json::object();

  // Throws StructuralError when the kind has no model.
  const Regressor& model(ComponentKind k) const;
  // Throws StructuralError when a model is missing or its columns differ
  // from the schema.
  void check_complete() const;
};

ModelBundle train_bundle(const ComponentDatasets& datasets, const TrainConfig& config);

// Directory of <kind>.json model files plus manifest.json.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
ModelBundle load_bundle(const std::filesystem::path& dir);

}  // namespace cbml
