#pragma once

#include <span>
#include <string>
#include <vector>

#include "cbml/dataset.hpp"

namespace cbml {

// A trained component function in engineering units. Implementations are
// immutable after construction and safe to share between threads.
class Regressor {
 public:
  virtual ~Regressor() = default;

  virtual const std::vector<Column>& input_columns() const = 0;
  virtual const std::vector<Column>& output_columns() const = 0;
  virtual std::vector<double> predict(std::span<const double> x) const = 0;
};

// y_k = bias_k + sum_j weights[k][j] * x_j. Used for aggregation nodes,
// hand-built stubs and tests.
class AffineModel : public Regressor {
 public:
  AffineModel(std::vector<Column> inputs, std::vector<Column> outputs, std::vector<std::vector<double>> weights,
              std::vector<double> bias);

  const std::vector<Column>& input_columns() const override { return inputs_; }
  const std::vector<Column>& output_columns() const override { return outputs_; }
  std::vector<double> predict(std::span<const double> x) const override;

  const std::vector<std::vector<double>>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }

 private:
  std::vector<Column> inputs_;
  std::vector<Column> outputs_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> bias_;
};

}  // namespace cbml
