#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cbml/dataset.hpp"

namespace cbml {

struct TreeNode {
  bool leaf = true;
  int depth = 0;
  // Internal nodes: samples with scaled feature <= threshold_scaled go left.
  int feature = -1;
  double threshold_scaled = 0.0;
  double threshold = 0.0;  // engineering units
  int left = -1;
  int right = -1;
  // Every node keeps its statistics; leaves also keep their sample rows.
  double value = 0.0;  // target mean
  double sse = 0.0;
  std::size_t count = 0;
  std::vector<std::size_t> samples;
};

struct CartOptions {
  int max_depth = 3;
  std::size_t min_leaf = 10;
};

class RegressionTree {
 public:
  std::vector<Column> features;
  Column target;
  std::vector<double> feature_min;
  std::vector<double> feature_max;
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  CartOptions options;

  double scale(std::size_t feature, double x) const;
  double unscale(std::size_t feature, double s) const;
  double predict(std::span<const double> x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;  // rows are samples
  int leaf_index(std::span<const double> x) const;
  std::vector<int> leaves() const;
  int depth() const;

  nlohmann::json to_json() const;
};

// Greedy CART on min-max scaled features, exhaustive over midpoints between
// consecutive distinct values, minimizing summed child squared error. Ties go
// to the lowest feature index, then the smallest threshold. Requires at least
// 2 * min_leaf rows.
RegressionTree fit_cart(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<Column> features,
                        Column target, const CartOptions& options);
// Uses the first output column of the dataset as the target.
RegressionTree fit_cart(const Dataset& data, const CartOptions& options);

struct SplitChoice {
  int feature = -1;
  double threshold_scaled = 0.0;
  double sse = 0.0;  // left + right
};

// Best root split over already scaled features, by direct evaluation of every
// candidate. Reference implementation for the fast search.
std::optional<SplitChoice> brute_force_split(const Eigen::MatrixXd& scaled, const Eigen::VectorXd& y,
                                             std::size_t min_leaf);

struct RuleCondition {
  std::size_t feature = 0;
  std::string name;
  std::string unit;
  bool greater = false;  // "<=" when false
  double threshold = 0.0;

  std::string to_string() const;
};

struct RulePath {
  int leaf = -1;
  std::vector<RuleCondition> conditions;
  double prediction = 0.0;
  std::string unit;
  std::size_t count = 0;

  std::string to_string(const std::string& target_name) const;
};

// An internal node whose two children split on different features.
struct DependenceFlag {
  int node = -1;
  std::string feature;
  std::string left_feature;
  std::string right_feature;
};

struct RuleSet {
  std::vector<RulePath> rules;
  std::vector<DependenceFlag> dependences;

  std::string to_text(const RegressionTree& tree) const;
  nlohmann::json to_json() const;
};

RuleSet extract_rules(const RegressionTree& tree);

struct LeafLinearModel {
  int leaf = -1;
  std::vector<std::string> features;
  std::vector<std::string> units;  // coefficient units, e.g. "W_avg/m2"
  std::vector<double> coefficients;
  double intercept = 0.0;
  std::size_t samples = 0;

  nlohmann::json to_json() const;
};

// OLS over the leaf's training rows. A feature constant within the leaf gets
// slope 0. Throws ValidationError when the leaf is too small and when
// features are collinear (naming them).
LeafLinearModel leaf_linear_model(const RegressionTree& tree, int leaf, const Dataset& data,
                                  const std::vector<std::string>& features);

struct GbdtOptions {
  std::size_t stages = 200;
  int max_depth = 4;
  double learning_rate = 0.1;
  std::size_t min_leaf = 5;
};

struct GbdtModel {
  double init = 0.0;
  double shrinkage = 0.1;
  std::vector<RegressionTree> trees;
  std::vector<Column> features;
  Column target;
  std::vector<double> train_loss;  // mean squared error after each stage, index 0 = init only

  double predict(std::span<const double> x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
  nlohmann::json to_json() const;
};

// Squared-loss boosting; requires at least 100 rows.
GbdtModel fit_gbdt(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<Column> features, Column target,
                   const GbdtOptions& options);

}  // namespace cbml
