#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cbml/composition.hpp"

namespace cbml {

struct PerturbationPlan {
  DesignConfig base;
  BuildingShape shape;
  std::vector<std::string> variables = default_variables();
  double delta = 0.05;
  // Multiplicative levels; empty means {1 - delta, 1, 1 + delta}.
  std::vector<double> levels;
  std::size_t samples = 500;
  std::uint64_t seed = 7;

  // Every continuous design variable; the integer floor count and the fixed
  // setpoints are left out.
  static std::vector<std::string> default_variables();
  std::vector<double> level_set() const;
  void validate() const;
};

// Local design-space samples and everything traced while evaluating them.
struct LocalDataset {
  std::vector<Column> variables;
  std::vector<double> base_values;
  double delta = 0.05;
  std::vector<DesignConfig> configs;
  std::vector<GeometrySummary> geometries;
  std::vector<std::vector<double>> inputs;  // sample x variable (engineering units)
  std::vector<Column> outputs;              // "node.output" names
  std::vector<std::vector<double>> values;  // sample x output, NaN where evaluation failed
  std::vector<std::string> failures;        // "sample 12: <message>"
  Evaluation base;

  std::size_t size() const { return inputs.size(); }
  // Index of a "node.output" column or npos.
  std::size_t output_index(std::string_view name) const;
};

using DesignEvaluator = std::function<Evaluation(const DesignConfig&)>;

LocalDataset dse_samples(const PerturbationPlan& plan, const DesignEvaluator& evaluate);
LocalDataset dse_samples(const PerturbationPlan& plan, const ModelBundle& bundle);

// OLS with intercept; returns beta (without intercept) or nullopt when the
// design matrix is rank deficient.
std::optional<Eigen::VectorXd> ols_slopes(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Rows are variables followed by intermediate parameters, columns are
// outputs. Undefined entries are NaN.
struct SensitivityMatrix {
  std::vector<Column> rows;
  std::vector<bool> intermediate;  // per row
  std::vector<Column> columns;
  Eigen::MatrixXd raw;
  Eigen::MatrixXd standardized;
  std::vector<std::string> warnings;
  double delta = 0.05;

  std::size_t row_index(std::string_view name) const;
  std::size_t column_index(std::string_view name) const;

  nlohmann::json to_json() const;
  // Outputs as rows, variables as columns, units in the header.
  std::string to_csv() const;
};

// Divides each output column by its largest absolute entry. Zero columns
// stay zero; NaN entries are ignored and kept.
Eigen::MatrixXd standardize(const Eigen::MatrixXd& raw);

struct ActivityPassivity {
  std::vector<double> activity;   // per row: sum over outputs
  std::vector<double> passivity;  // per column: sum over rows
};

ActivityPassivity activity_passivity(const Eigen::MatrixXd& standardized);

SensitivityMatrix sensitivities(const LocalDataset& data);

// f(base with variable * (1 + delta)) - f(base with variable * (1 - delta)).
double central_difference(const PerturbationPlan& plan, const DesignEvaluator& evaluate, std::string_view variable,
                          std::string_view output);

}  // namespace cbml
