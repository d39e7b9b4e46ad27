#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cbml/components.hpp"
#include "cbml/composition.hpp"
#include "cbml/oracle.hpp"
#include "cbml/sampling.hpp"
#include "cbml/util.hpp"

namespace cbml::testing {

// Random affine stand-ins for every component, with the real schemas.
inline ModelBundle affine_bundle(std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  ModelBundle b;
  for (auto k : kComponentKinds) {
    const auto& s = schema(k);
    std::vector<std::vector<double>> w(s.outputs.size(), std::vector<double>(s.inputs.size()));
    std::vector<double> bias(s.outputs.size());
    for (auto& row : w) {
      for (auto& v : row) v = scale * rng.uniform(-1.0, 1.0);
    }
    for (auto& v : bias) v = scale * rng.uniform(-1.0, 1.0);
    b.models[k] = std::make_shared<AffineModel>(s.inputs, s.outputs, w, bias);
  }
  return b;
}

// Evaluates the hierarchy by calling each component directly, without the
// graph machinery.
inline double hand_chained_eui(const DesignConfig& config, const GeometrySummary& geometry, const ModelBundle& b) {
  std::map<ComponentKind, double> flow_sum;
  for (const auto& inst : element_instances(config, geometry)) {
    flow_sum[inst.kind] += b.model(inst.kind).predict(inst.inputs)[0];
  }
  const auto statics = zone_load_statics(config, geometry);
  const std::vector<double> zone_in{statics[0],
                                    flow_sum[ComponentKind::Wall],
                                    flow_sum[ComponentKind::Window],
                                    flow_sum[ComponentKind::Floor],
                                    flow_sum[ComponentKind::Roof],
                                    flow_sum[ComponentKind::Infiltration],
                                    statics[1],
                                    statics[2],
                                    statics[3],
                                    statics[4],
                                    statics[5]};
  const double heat = b.model(ComponentKind::ZoneHeating).predict(zone_in)[0];
  const double cool = b.model(ComponentKind::ZoneCooling).predict(zone_in)[0];
  const double light = b.model(ComponentKind::ZoneLighting).predict(zone_lighting_inputs(config, geometry))[0];
  const double area = geometry.total_floor_area;
  const double h = config.operating_hours;
  std::map<std::string, double> named{{"boiler_efficiency", config.boiler_efficiency},
                                      {"cop_heating", config.cop_heating},
                                      {"cop_cooling", config.cop_cooling},
                                      {"heating_load", load_intensity(heat, area, h)},
                                      {"cooling_load", load_intensity(cool, area, h)},
                                      {"lighting_load", load_intensity(light, area, h)}};
  std::vector<double> building_in;
  for (const auto& c : schema(ComponentKind::BuildingEnergy).inputs) building_in.push_back(named.at(c.name));
  return b.model(ComponentKind::BuildingEnergy).predict(building_in)[0];
}

inline std::vector<SampleRecord> simulated_boxes(std::size_t n, std::uint64_t seed) {
  static const WeatherSeries weather = synth_weather("temperate-default");
  std::vector<SampleRecord> out;
  const auto configs = lhs_samples(ParameterSpace::standard(), n, seed);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& c = configs[i];
    out.push_back(simulate_sample("s" + std::to_string(i), c, Footprint::box(c.length, c.width, c.num_floors), weather));
  }
  return out;
}

inline TrainConfig tiny_training() {
  TrainConfig c;
  c.hidden_widths = {8};
  c.l2_values = {1e-4};
  c.max_epochs = 40;
  c.patience = 10;
  c.seed = 5;
  return c;
}

}  // namespace cbml::testing
