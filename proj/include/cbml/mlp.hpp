#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cbml/dataset.hpp"
#include "cbml/regressor.hpp"

namespace cbml {

// Per-feature min-max scaling onto [0, 1].
struct ScalerParams {
  std::vector<Column> columns;
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  std::size_t size() const { return static_cast<std::size_t>(min.size()); }
  double scale(std::size_t j, double x) const { return (x - min[j]) / (max[j] - min[j]); }
  double unscale(std::size_t j, double s) const { return min[j] + s * (max[j] - min[j]); }

  // Row-major sample matrices (rows = samples).
  Eigen::MatrixXd scale(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd unscale(const Eigen::MatrixXd& s) const;
};

// Throws ValidationError naming the first column whose spread is <= 1e-12.
ScalerParams fit_scaler(const Eigen::MatrixXd& data, const std::vector<Column>& columns);

// One hidden rectifier layer and a linear output layer, in scaled space.
struct Network {
  Eigen::MatrixXd hidden_weights;  // hidden x inputs
  Eigen::VectorXd hidden_bias;
  Eigen::MatrixXd output_weights;  // outputs x hidden
  Eigen::VectorXd output_bias;

  static Network zeros(std::size_t inputs, std::size_t hidden, std::size_t outputs);
  // Weights and biases uniform in +-1/sqrt(fan_in).
  static Network random(std::size_t inputs, std::size_t hidden, std::size_t outputs, std::uint64_t seed);

  std::size_t inputs() const { return static_cast<std::size_t>(hidden_weights.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(hidden_weights.rows()); }
  std::size_t outputs() const { return static_cast<std::size_t>(output_weights.rows()); }

  // Column-major batches: one sample per column.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  double weight_norm_squared() const;
  bool finite() const;
};

struct LossGradient {
  double loss = 0.0;
  Network gradient;
};

// loss = 0.5 * mean over samples of the squared output error summed over
// outputs, plus l2 / (2 m) * squared norm of both weight matrices. Biases are
// not penalized. x and y hold one sample per column.
LossGradient loss_and_gradient(const Network& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double l2);

struct TrainConfig {
  double learning_rate = 0.001;
  std::vector<std::size_t> hidden_widths{200, 400, 600, 800};
  std::vector<double> l2_values{3e-4, 1e-4, 3e-5, 1e-5};
  double validation_fraction = 0.2;
  std::size_t batch_divisor = 5;  // batch size = ceil(n_train / batch_divisor)
  std::size_t patience = 50;
  std::size_t max_epochs = 2000;
  std::uint64_t seed = 42;
  std::size_t min_rows = 50;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct GridPointResult {
  std::size_t hidden = 0;
  double l2 = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  bool stopped_early = false;
  double validation_loss = 0.0;  // scaled-space mean squared error
  double weight_norm = 0.0;
};

struct TrainReport {
  std::vector<GridPointResult> grid;
  std::size_t selected = 0;
  std::size_t train_rows = 0;
  std::size_t validation_rows = 0;
  double validation_r2 = 0.0;  // engineering units, first output
  TrainConfig config;

  const GridPointResult& best() const { return grid.at(selected); }
  nlohmann::json to_json() const;
  static TrainReport from_json(const nlohmann::json& j);
};

class MlpModel : public Regressor {
 public:
  MlpModel() = default;
  MlpModel(std::string name, ScalerParams input_scaler, ScalerParams output_scaler, Network net);

  const std::string& name() const { return name_; }
  const std::string& tag() const { return tag_; }
  void set_tag(std::string tag) { tag_ = std::move(tag); }
  const std::vector<Column>& input_columns() const override { return input_scaler_.columns; }
  const std::vector<Column>& output_columns() const override { return output_scaler_.columns; }
  const ScalerParams& input_scaler() const { return input_scaler_; }
  const ScalerParams& output_scaler() const { return output_scaler_; }
  const Network& network() const { return net_; }
  const TrainReport& report() const { return report_; }
  void set_report(TrainReport r) { report_ = std::move(r); }
  // Candidate features left out because they were constant in training.
  const std::vector<std::string>& dropped_features() const { return dropped_features_; }
  void set_dropped_features(std::vector<std::string> names) { dropped_features_ = std::move(names); }

  std::vector<double> predict(std::span<const double> x) const override;
  // Rows are samples, engineering units in and out.
  Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& x) const;

  nlohmann::json to_json() const;
  static MlpModel from_json(const nlohmann::json& j);

 private:
  std::string name_;
  std::string tag_ = "component";
  ScalerParams input_scaler_;
  ScalerParams output_scaler_;
  Network net_;
  TrainReport report_;
  std::vector<std::string> dropped_features_;
};

inline constexpr const char* kModelFormat = "cbml-mlp/1";

// Grid search over widths x l2 values; returns the model with the lowest
// validation loss. Throws DivergenceError naming the grid point when a loss
// becomes non-finite.
MlpModel train_mlp(const Dataset& data, const TrainConfig& config, const std::string& name = "model");

// Trains one grid point on a pre-split, pre-scaled problem. Exposed for tests.
struct FitResult {
  Network net;
  GridPointResult summary;
};
FitResult fit_network(const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train, const Eigen::MatrixXd& x_val,
                      const Eigen::MatrixXd& y_val, std::size_t hidden, double l2, const TrainConfig& config);

}  // namespace cbml
