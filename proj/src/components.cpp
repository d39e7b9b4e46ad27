#include "cbml/components.hpp"

#include "cbml/util.hpp"

namespace cbml {

using nlohmann::json;

std::string_view to_string(ComponentKind k) {
  switch (k) {
    case ComponentKind::Wall: return "wall";
    case ComponentKind::Window: return "window";
    case ComponentKind::Floor: return "floor";
    case ComponentKind::Roof: return "roof";
    case ComponentKind::Infiltration: return "infiltration";
    case ComponentKind::ZoneHeating: return "zone_heating";
    case ComponentKind::ZoneCooling: return "zone_cooling";
    case ComponentKind::ZoneLighting: return "zone_lighting";
    case ComponentKind::BuildingEnergy: return "building_energy";
  }
  return "?";
}

ComponentKind component_kind_from_string(std::string_view name) {
  for (auto k : kComponentKinds) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown component kind '" + std::string(name) + "'");
}

int level(ComponentKind k) {
  switch (k) {
    case ComponentKind::ZoneHeating:
    case ComponentKind::ZoneCooling:
    case ComponentKind::ZoneLighting: return 2;
    case ComponentKind::BuildingEnergy: return 3;
    default: return 1;
  }
}

json ComponentSchema::to_json() const {
  auto cols = [](const std::vector<Column>& cs) {
    json a = json::array();
    for (const auto& c : cs) a.push_back({{"name", c.name}, {"unit", c.unit}});
    return a;
  };
  return {{"kind", std::string(cbml::to_string(kind))},
          {"level", level(kind)},
          {"table_row", table_row},
          {"inputs", cols(inputs)},
          {"outputs", cols(outputs)}};
}

namespace {

std::vector<ComponentSchema> make_schemas() {
  const Column area{"area", "m2"};
  const Column orientation{"orientation", "deg"};
  const Column u_value{"u_value", "W/m2K"};
  const Column g_value{"g_value", "-"};
  const Column heat_capacity{"heat_capacity", "J/m3K"};
  const Column flow{"heat_flow", units::kAverageFlow};
  const std::vector<Column> zone_inputs{
      {"floor_area", "m2"},
      {"wall_heat_flow", units::kAverageFlow},
      {"window_heat_flow", units::kAverageFlow},
      {"floor_heat_flow", units::kAverageFlow},
      {"roof_heat_flow", units::kAverageFlow},
      {"infiltration_heat_flow", units::kAverageFlow},
      {"internal_mass", "kJ/m2K"},
      {"light_gain", "W/m2"},
      {"equipment_gain", "W/m2"},
      {"operating_hours", "h"},
      {"occupancy", "m2/person"},
  };
  return {
      {ComponentKind::Wall, "wall", {area, orientation, u_value}, {flow}},
      {ComponentKind::Window, "window", {area, orientation, u_value, g_value}, {flow}},
      {ComponentKind::Floor, "floor_roof", {area, u_value, heat_capacity}, {flow}},
      {ComponentKind::Roof, "floor_roof", {area, u_value, heat_capacity}, {flow}},
      {ComponentKind::Infiltration,
       "infiltration",
       {{"area", "m2"}, {"height", "m"}, {"permeability", "m3/m2h"}, heat_capacity},
       {flow}},
      {ComponentKind::ZoneHeating, "zone_heating_cooling", zone_inputs, {{"heating_load", units::kLoad}}},
      {ComponentKind::ZoneCooling, "zone_heating_cooling", zone_inputs, {{"cooling_load", units::kLoad}}},
      {ComponentKind::ZoneLighting,
       "zone_lighting",
       {{"floor_area", "m2"}, {"light_gain", "W/m2"}, {"operating_hours", "h"}, {"window_area", "m2"}, g_value},
       {{"lighting_load", units::kLoad}}},
      {ComponentKind::BuildingEnergy,
       "building_energy",
       {{"boiler_efficiency", "-"},
        {"cop_heating", "-"},
        {"cop_cooling", "-"},
        {"heating_load", units::kIntensityLoad},
        {"cooling_load", units::kIntensityLoad},
        {"lighting_load", units::kIntensityLoad}},
       {{"eui", units::kEui}}},
  };
}

}  // namespace

const ComponentSchema& schema(ComponentKind k) {
  static const std::vector<ComponentSchema> schemas = make_schemas();
  return schemas.at(static_cast<std::size_t>(k));
}

SampleRecord simulate_sample(std::string id, const DesignConfig& config, const Footprint& footprint,
                             const WeatherSeries& weather) {
  SampleRecord s;
  s.id = std::move(id);
  s.config = config;
  s.geometry = derive_geometry(config, footprint);
  s.summary = aggregate(simulate(config, s.geometry, weather));
  return s;
}

std::vector<ElementInstance> element_instances(const DesignConfig& c, const GeometrySummary& g) {
  std::vector<ElementInstance> out;
  for (auto dir : kCardinals) {
    const double a = g.wall_area[static_cast<std::size_t>(dir)];
    const std::string tag(short_name(dir));
    if (a > 0.0) {
      out.push_back({"wall." + tag,
                     ComponentKind::Wall,
                     {a, azimuth_deg(dir), c.u_wall},
                     {"geometry.wall_area." + tag, "geometry.azimuth." + tag, "config.u_wall"}});
    }
  }
  for (auto dir : kCardinals) {
    const double a = g.window_area[static_cast<std::size_t>(dir)];
    const std::string tag(short_name(dir));
    if (a > 0.0) {
      out.push_back({"window." + tag,
                     ComponentKind::Window,
                     {a, azimuth_deg(dir), c.u_window, c.g_value},
                     {"geometry.window_area." + tag, "geometry.azimuth." + tag, "config.u_window", "config.g_value"}});
    }
  }
  out.push_back({"floor",
                 ComponentKind::Floor,
                 {g.ground_area, c.u_ground, c.slab_heat_capacity},
                 {"geometry.ground_area", "config.u_ground", "config.slab_heat_capacity"}});
  for (const auto& seg : g.roof_segments) {
    const std::string lv = std::to_string(seg.level);
    out.push_back({"roof.L" + lv,
                   ComponentKind::Roof,
                   {seg.area, c.u_roof, c.slab_heat_capacity},
                   {"geometry.roof_area.L" + lv, "config.u_roof", "config.slab_heat_capacity"}});
  }
  out.push_back({"infiltration",
                 ComponentKind::Infiltration,
                 {g.envelope_area, g.building_height, c.permeability, c.slab_heat_capacity},
                 {"geometry.envelope_area", "geometry.building_height", "config.permeability",
                  "config.slab_heat_capacity"}});
  return out;
}

std::vector<double> zone_load_statics(const DesignConfig& c, const GeometrySummary& g) {
  return {g.total_floor_area, c.internal_mass_capacity, c.light_gain, c.equipment_gain, c.operating_hours,
          c.occupancy_density};
}

std::vector<double> zone_lighting_inputs(const DesignConfig& c, const GeometrySummary& g) {
  return {g.total_floor_area, c.light_gain, c.operating_hours, g.total_window_area(), c.g_value};
}

double load_intensity(double occupied_mean_load, double floor_area, double operating_hours) {
  return occupied_mean_load * annual_occupied_hours(operating_hours) / (static_cast<double>(kHoursPerYear) * floor_area);
}

ComponentDatasets extract_component_datasets(const std::vector<SampleRecord>& samples) {
  if (samples.empty()) throw ValidationError("no samples to extract component datasets from");
  ComponentDatasets out;
  for (auto k : kComponentKinds) out.emplace(k, Dataset(schema(k).inputs, schema(k).outputs));

  for (const auto& s : samples) {
    const auto& sum = s.summary;
    std::array<double, 5> kind_flow{};  // ordered as the zone schema flow columns
    for (const auto& inst : element_instances(s.config, s.geometry)) {
      const ElementAverage* e = sum.find(inst.id);
      if (!e) throw ExtractionError("sample '" + s.id + "': oracle summary lacks field '" + inst.id + "'");
      const double y = e->mean_flow;
      out.at(inst.kind).append(inst.inputs, std::span<const double>(&y, 1), s.id + "/" + inst.id);
      kind_flow[static_cast<std::size_t>(inst.kind)] += y;  // level-1 kinds come first
    }
    // Zone flow inputs: wall, window, floor, roof, infiltration.
    const auto statics = zone_load_statics(s.config, s.geometry);
    std::vector<double> zone_in{statics[0], kind_flow[0], kind_flow[1], kind_flow[2], kind_flow[3], kind_flow[4]};
    zone_in.insert(zone_in.end(), statics.begin() + 1, statics.end());
    const double heat = sum.heating_load;
    const double cool = sum.cooling_load;
    const double light = sum.lighting_load;
    out.at(ComponentKind::ZoneHeating).append(zone_in, std::span<const double>(&heat, 1), s.id + "/zone.heating");
    out.at(ComponentKind::ZoneCooling).append(zone_in, std::span<const double>(&cool, 1), s.id + "/zone.cooling");
    out.at(ComponentKind::ZoneLighting)
        .append(zone_lighting_inputs(s.config, s.geometry), std::span<const double>(&light, 1),
                s.id + "/zone.lighting");

    if (!(sum.total_floor_area > 0.0)) {
      throw ExtractionError("sample '" + s.id + "': oracle summary lacks field 'total_floor_area'");
    }
    const double a = s.geometry.total_floor_area;
    const double op = s.config.operating_hours;
    const std::vector<double> building_in{s.config.boiler_efficiency,     s.config.cop_heating,
                                          s.config.cop_cooling,           load_intensity(heat, a, op),
                                          load_intensity(cool, a, op),    load_intensity(light, a, op)};
    const double eui = sum.eui;
    out.at(ComponentKind::BuildingEnergy).append(building_in, std::span<const double>(&eui, 1), s.id + "/building");
  }
  return out;
}

const Regressor& ModelBundle::model(ComponentKind k) const {
  const auto it = models.find(k);
  if (it == models.end() || !it->second) {
    throw StructuralError("model bundle has no model for component '" + std::string(to_string(k)) + "'");
  }
  return *it->second;
}

void ModelBundle::check_complete() const {
  for (auto k : kComponentKinds) {
    const auto& m = model(k);
    if (m.input_columns() != schema(k).inputs || m.output_columns() != schema(k).outputs) {
      throw StructuralError("model for component '" + std::string(to_string(k)) + "' does not match its schema");
    }
  }
}

ModelBundle train_bundle(const ComponentDatasets& datasets, const TrainConfig& config) {
  for (auto k : kComponentKinds) {
    const auto it = datasets.find(k);
    if (it == datasets.end() || it->second.empty()) {
      throw ValidationError("dataset for component '" + std::string(to_string(k)) + "' is empty");
    }
  }
  ModelBundle bundle;
  json validation = json::object();
  json rows = json::object();
  for (auto k : kComponentKinds) {
    const std::string name(to_string(k));
    try {
      auto m = std::make_shared<MlpModel>(train_mlp(datasets.at(k), config, name));
      validation[name] = m->report().validation_r2;
      rows[name] = datasets.at(k).rows();
      bundle.models[k] = std::move(m);
    } catch (const Error& e) {
      throw DivergenceError("training component '" + name + "' failed: " + e.what());
    }
  }
  bundle.provenance = {{"train_config", config.to_json()},
                       {"oracle", "lumped-capacitance/1"},
                       {"zone_flow_inputs", "summed per element kind"},
                       {"rows", rows},
                       {"validation_r2", validation}};
  return bundle;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
  bundle.check_complete();
  std::filesystem::create_directories(dir);
  json files = json::object();
  for (auto k : kComponentKinds) {
    const auto* mlp = dynamic_cast<const MlpModel*>(&bundle.model(k));
    if (!mlp) throw CapabilityError("only trained network models can be saved");
    const std::string file = std::string(to_string(k)) + ".json";
    write_text_file(dir / file, mlp->to_json().dump() + "\n");
    files[std::string(to_string(k))] = file;
  }
  json manifest = {{"format", "cbml-bundle/1"}, {"models", files}, {"provenance", bundle.provenance}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw PrerequisiteError("no model bundle at " + dir.string() + "; run the 'train' subcommand first");
  }
  const json manifest = json::parse(read_text_file(manifest_path));
  if (manifest.value("format", std::string{}) != "cbml-bundle/1") {
    throw ValidationError("unsupported bundle format in " + manifest_path.string());
  }
  ModelBundle b;
  b.provenance = manifest.value("provenance", json::object());
  for (auto k : kComponentKinds) {
    const std::string name(to_string(k));
    if (!manifest.at("models").contains(name)) {
      throw StructuralError("bundle manifest lacks component '" + name + "'");
    }
    const auto file = dir / manifest.at("models").at(name).get<std::string>();
    b.models[k] = std::make_shared<MlpModel>(MlpModel::from_json(json::parse(read_text_file(file))));
  }
  b.check_complete();
  return b;
}

}  // namespace cbml
