#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cbml/components.hpp"
#include "cbml/regressor.hpp"

namespace cbml {

// Component nodes hold trained models; aggregate nodes are fixed
// arithmetic (per-kind flow sums, load-to-intensity conversion).
enum class NodeRole { Component, Aggregate };

struct GraphNode {
  std::string id;
  NodeRole role = NodeRole::Component;
  int level = 1;
  std::optional<ComponentKind> kind;
  std::shared_ptr<const Regressor> fn;
};

struct GraphEdge {
  std::string producer;
  std::string output;
  std::string consumer;
  std::string input;
  std::string unit;
};

struct Activation {
  std::string node;
  std::string output;
  double value = 0.0;
  std::string unit;

  bool operator==(const Activation&) const = default;
};

struct Evaluation {
  double output = 0.0;
  std::string unit;
  std::vector<Activation> trace;  // topological order

  const Activation* find(std::string_view node, std::string_view output) const;
  // Throws ValidationError when absent.
  double value(std::string_view node, std::string_view output) const;
};

class CompositionGraph {
 public:
  void add_node(GraphNode node);
  void connect(std::string_view producer, std::string_view output, std::string_view consumer, std::string_view input);
  void bind(std::string_view consumer, std::string_view input, double value, std::string source = {});
  void set_result(std::string_view node, std::string_view output);
  // Checks bindings, units and acyclicity and fixes the evaluation order.
  // Ready nodes are ordered by id, so the order does not depend on insertion
  // order.
  void finalize();

  // Throws EvaluationError naming the node on a non-finite activation.
  Evaluation evaluate() const;

  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  const GraphNode& node(std::string_view id) const;
  std::size_t component_node_count() const;
  std::size_t count(ComponentKind kind) const;
  bool finalized() const { return finalized_; }

  nlohmann::json to_json() const;

 private:
  struct Binding {
    bool bound = false;
    bool from_node = false;
    std::size_t producer = 0;
    std::size_t producer_output = 0;
    double value = 0.0;
    std::string source;
  };

  std::size_t index_of(std::string_view id) const;
  std::size_t input_index(std::size_t node, std::string_view input) const;
  std::size_t output_index(std::size_t node, std::string_view output) const;
  Binding& slot(std::string_view consumer, std::string_view input);

  std::vector<GraphNode> nodes_;
  std::vector<std::vector<Binding>> bindings_;
  std::vector<GraphEdge> edges_;
  std::vector<std::size_t> order_;
  std::size_t result_node_ = 0;
  std::size_t result_output_ = 0;
  bool has_result_ = false;
  bool finalized_ = false;
};

// Converts a zone load averaged over occupied hours (W) to an annual-mean
// load per floor area (W/m2). Inputs: load, floor_area, operating_hours.
class IntensityModel : public Regressor {
 public:
  explicit IntensityModel(std::string load_name);
  const std::vector<Column>& input_columns() const override { return inputs_; }
  const std::vector<Column>& output_columns() const override { return outputs_; }
  std::vector<double> predict(std::span<const double> x) const override;

 private:
  std::vector<Column> inputs_;
  std::vector<Column> outputs_;
};

// One node per wall/window with positive area, per roof segment, floor and
// infiltration; per-kind sum nodes; three zone nodes; three intensity nodes;
// the building node. Result: building.eui in kWh/m2a.
CompositionGraph build_graph(const DesignConfig& config, const GeometrySummary& geometry, const ModelBundle& bundle);

// Derives geometry for the shape and evaluates the composed graph.
Evaluation predict_design(const DesignConfig& config, const BuildingShape& shape, const ModelBundle& bundle);

}  // namespace cbml
