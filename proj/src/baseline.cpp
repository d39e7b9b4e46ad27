#include "cbml/baseline.hpp"

#include "cbml/util.hpp"

namespace cbml {

const std::vector<Column>& monolithic_feature_columns() {
  static const std::vector<Column> cols{
      {"floor_area", "m2"},
      {"height", "m"},
      {"num_floors", "-"},
      {"relative_compactness", "m3/m2"},
      {"u_wall", "W/m2K"},
      {"u_ground", "W/m2K"},
      {"u_roof", "W/m2K"},
      {"u_window", "W/m2K"},
      {"g_value", "-"},
      {"permeability", "m3/m2h"},
      {"internal_mass", "J/m2K"},
      {"wwr_north", "-"},
      {"wwr_east", "-"},
      {"wwr_west", "-"},
      {"wwr_south", "-"},
      {"operating_hours", "h"},
      {"light_gain", "W/m2"},
      {"equipment_gain", "W/m2"},
      {"occupancy", "m2/person"},
      {"heating_setpoint", "degC"},
      {"cooling_setpoint", "degC"},
      {"boiler_efficiency", "-"},
      {"cop_heating", "-"},
      {"cop_cooling", "-"},
  };
  return cols;
}

double relative_compactness(const GeometrySummary& g) {
  if (!(g.envelope_area > 0.0)) throw ValidationError("zero envelope area");
  return g.volume / g.envelope_area;
}

double shape_factor(const GeometrySummary& g) {
  if (!(g.volume > 0.0)) throw ValidationError("zero volume");
  return g.envelope_area / g.volume;
}

std::vector<double> featurize(const DesignConfig& c, const GeometrySummary& g) {
  return {g.total_floor_area,
          c.floor_height,
          static_cast<double>(c.num_floors),
          relative_compactness(g),
          c.u_wall,
          c.u_ground,
          c.u_roof,
          c.u_window,
          c.g_value,
          c.permeability,
          c.internal_mass_capacity * 1000.0,
          c.wwr_north,
          c.wwr_east,
          c.wwr_west,
          c.wwr_south,
          c.operating_hours,
          c.light_gain,
          c.equipment_gain,
          c.occupancy_density,
          c.heating_setpoint,
          c.cooling_setpoint,
          c.boiler_efficiency,
          c.cop_heating,
          c.cop_cooling};
}

Dataset monolithic_dataset(const std::vector<SampleRecord>& samples) {
  Dataset d(monolithic_feature_columns(), {{"annual_energy", "kWh/a"}});
  for (const auto& s : samples) {
    const double y = s.summary.annual_final_energy;
    d.append(featurize(s.config, s.geometry), std::span<const double>(&y, 1), s.id);
  }
  return d;
}

MlpModel train_monolithic(const std::vector<SampleRecord>& samples, const TrainConfig& config) {
  const Dataset full = monolithic_dataset(samples);
  std::vector<Column> kept;
  std::vector<Eigen::Index> idx;
  nlohmann::json dropped = nlohmann::json::array();
  for (Eigen::Index j = 0; j < full.inputs.cols(); ++j) {
    const auto col = full.inputs.col(j);
    if (full.rows() > 0 && col.maxCoeff() - col.minCoeff() > 1e-12) {
      kept.push_back(full.input_columns[static_cast<std::size_t>(j)]);
      idx.push_back(j);
    } else {
      dropped.push_back(full.input_columns[static_cast<std::size_t>(j)].name);
    }
  }
  Dataset d(kept, full.output_columns);
  d.inputs.resize(full.inputs.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) d.inputs.col(static_cast<Eigen::Index>(j)) = full.inputs.col(idx[j]);
  d.outputs = full.outputs;
  d.tags = full.tags;
  MlpModel m = train_mlp(d, config, "monolithic");
  m.set_tag("monolithic");
  m.set_dropped_features(dropped.get<std::vector<std::string>>());
  return m;
}

MonolithicPrediction predict_monolithic(const MlpModel& model, const DesignConfig& config,
                                        const GeometrySummary& geometry) {
  const auto features = featurize(config, geometry);
  const auto& all = monolithic_feature_columns();
  std::vector<double> x;
  for (const auto& c : model.input_columns()) {
    std::size_t j = 0;
    while (j < all.size() && !(all[j] == c)) ++j;
    if (j == all.size()) throw ValidationError("monolithic model input '" + c.name + "' is not a known feature");
    x.push_back(features[j]);
  }
  MonolithicPrediction p;
  p.annual_energy = model.predict(x).at(0);
  p.eui = p.annual_energy / geometry.total_floor_area;
  p.warnings = validate_config(config, ParameterSpace::standard());
  return p;
}

}  // namespace cbml
