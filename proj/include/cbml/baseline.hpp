#pragma once

#include <vector>

#include "cbml/components.hpp"
#include "cbml/mlp.hpp"
#include "cbml/sampling.hpp"

namespace cbml {

// Fixed, versioned feature order of the monolithic regressor.
inline constexpr const char* kMonolithicFeatureVersion = "monolithic-features/1";
const std::vector<Column>& monolithic_feature_columns();

// Volume over envelope area (m3/m2), the feature the monolithic model uses.
double relative_compactness(const GeometrySummary& g);
// Envelope area over volume (m2/m3), the facade-to-volume convention.
double shape_factor(const GeometrySummary& g);

// Throws ValidationError on zero envelope area.
std::vector<double> featurize(const DesignConfig& config, const GeometrySummary& geometry);

// Rows in the fixed feature order, target annual final energy (kWh/a).
Dataset monolithic_dataset(const std::vector<SampleRecord>& samples);

// Features that are constant over the training set (the fixed setpoints)
// carry no information and would fail scaling; they are dropped and listed in
// the returned model's report provenance.
MlpModel train_monolithic(const std::vector<SampleRecord>& samples, const TrainConfig& config);

struct MonolithicPrediction {
  double annual_energy = 0.0;  // kWh/a
  double eui = 0.0;            // kWh/m2a
  std::vector<Violation> warnings;
};

MonolithicPrediction predict_monolithic(const MlpModel& model, const DesignConfig& config,
                                        const GeometrySummary& geometry);

}  // namespace cbml
