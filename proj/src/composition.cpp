#include "cbml/composition.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cbml/util.hpp"

namespace cbml {

using nlohmann::json;

const Activation* Evaluation::find(std::string_view node, std::string_view output) const {
  for (const auto& a : trace) {
    if (a.node == node && a.output == output) return &a;
  }
  return nullptr;
}

double Evaluation::value(std::string_view node, std::string_view output) const {
  const Activation* a = find(node, output);
  if (!a) throw ValidationError("no activation " + std::string(node) + "." + std::string(output));
  return a->value;
}

void CompositionGraph::add_node(GraphNode node) {
  if (!node.fn) throw StructuralError("graph node '" + node.id + "' has no function");
  for (const auto& n : nodes_) {
    if (n.id == node.id) throw StructuralError("duplicate graph node '" + node.id + "'");
  }
  bindings_.emplace_back(node.fn->input_columns().size());
  nodes_.push_back(std::move(node));
  finalized_ = false;
}

std::size_t CompositionGraph::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  throw StructuralError("unknown graph node '" + std::string(id) + "'");
}

const GraphNode& CompositionGraph::node(std::string_view id) const { return nodes_[index_of(id)]; }

std::size_t CompositionGraph::input_index(std::size_t node, std::string_view input) const {
  const auto& cols = nodes_[node].fn->input_columns();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].name == input) return j;
  }
  throw StructuralError("node '" + nodes_[node].id + "' has no input '" + std::string(input) + "'");
}

std::size_t CompositionGraph::output_index(std::size_t node, std::string_view output) const {
  const auto& cols = nodes_[node].fn->output_columns();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].name == output) return j;
  }
  throw StructuralError("node '" + nodes_[node].id + "' has no output '" + std::string(output) + "'");
}

CompositionGraph::Binding& CompositionGraph::slot(std::string_view consumer, std::string_view input) {
  const std::size_t c = index_of(consumer);
  Binding& b = bindings_[c][input_index(c, input)];
  if (b.bound) {
    throw StructuralError("input '" + std::string(input) + "' of node '" + std::string(consumer) +
                          "' is bound twice");
  }
  b.bound = true;
  finalized_ = false;
  return b;
}

void CompositionGraph::connect(std::string_view producer, std::string_view output, std::string_view consumer,
                               std::string_view input) {
  const std::size_t p = index_of(producer);
  const std::size_t po = output_index(p, output);
  const std::size_t c = index_of(consumer);
  const std::string& out_unit = nodes_[p].fn->output_columns()[po].unit;
  const std::string& in_unit = nodes_[c].fn->input_columns()[input_index(c, input)].unit;
  if (out_unit != in_unit) {
    throw StructuralError("unit mismatch on edge " + std::string(producer) + "." + std::string(output) + " [" +
                          out_unit + "] -> " + std::string(consumer) + "." + std::string(input) + " [" + in_unit +
                          "]");
  }
  Binding& b = slot(consumer, input);
  b.from_node = true;
  b.producer = p;
  b.producer_output = po;
  edges_.push_back({std::string(producer), std::string(output), std::string(consumer), std::string(input), out_unit});
}

void CompositionGraph::bind(std::string_view consumer, std::string_view input, double value, std::string source) {
  Binding& b = slot(consumer, input);
  b.value = value;
  b.source = std::move(source);
}

void CompositionGraph::set_result(std::string_view node, std::string_view output) {
  result_node_ = index_of(node);
  result_output_ = output_index(result_node_, output);
  has_result_ = true;
  finalized_ = false;
}

void CompositionGraph::finalize() {
  if (!has_result_) throw StructuralError("graph has no result output");
  const std::size_t n = nodes_.size();
  std::vector<std::size_t> pending(n, 0);
  std::vector<std::vector<std::size_t>> consumers(n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto& cols = nodes_[c].fn->input_columns();
    for (std::size_t j = 0; j < bindings_[c].size(); ++j) {
      const Binding& b = bindings_[c][j];
      if (!b.bound) {
        throw StructuralError("input '" + cols[j].name + "' of node '" + nodes_[c].id + "' is unbound");
      }
      if (b.from_node) {
        ++pending[c];
        consumers[b.producer].push_back(c);
      }
    }
  }
  auto by_id = [this](std::size_t a, std::size_t b) { return nodes_[a].id < nodes_[b].id; };
  std::set<std::size_t, decltype(by_id)> ready(by_id);
  for (std::size_t i = 0; i < n; ++i) {
    if (pending[i] == 0) ready.insert(i);
  }
  order_.clear();
  while (!ready.empty()) {
    const std::size_t i = *ready.begin();
    ready.erase(ready.begin());
    order_.push_back(i);
    for (std::size_t c : consumers[i]) {
      if (--pending[c] == 0) ready.insert(c);
    }
  }
  if (order_.size() != n) throw StructuralError("composition graph contains a cycle");
  finalized_ = true;
}

Evaluation CompositionGraph::evaluate() const {
  if (!finalized_) throw StructuralError("composition graph must be finalized before evaluation");
  std::vector<std::vector<double>> outputs(nodes_.size());
  Evaluation ev;
  std::vector<double> x;
  for (std::size_t i : order_) {
    const auto& node = nodes_[i];
    x.resize(bindings_[i].size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      const Binding& b = bindings_[i][j];
      x[j] = b.from_node ? outputs[b.producer][b.producer_output] : b.value;
    }
    outputs[i] = node.fn->predict(x);
    const auto& cols = node.fn->output_columns();
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (!std::isfinite(outputs[i][k])) {
        throw EvaluationError("non-finite activation at node '" + node.id + "' output '" + cols[k].name + "'");
      }
      ev.trace.push_back({node.id, cols[k].name, outputs[i][k], cols[k].unit});
    }
  }
  ev.output = outputs[result_node_][result_output_];
  ev.unit = nodes_[result_node_].fn->output_columns()[result_output_].unit;
  return ev;
}

std::size_t CompositionGraph::component_node_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const GraphNode& n) { return n.role == NodeRole::Component; }));
}

std::size_t CompositionGraph::count(ComponentKind kind) const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [&](const GraphNode& n) {
    return n.role == NodeRole::Component && n.kind == kind;
  }));
}

json CompositionGraph::to_json() const {
  json nodes = json::array();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    json inputs = json::array();
    const auto& cols = n.fn->input_columns();
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const Binding& b = bindings_[i][j];
      json in = {{"name", cols[j].name}, {"unit", cols[j].unit}};
      if (b.from_node) {
        in["from"] = nodes_[b.producer].id + "." + nodes_[b.producer].fn->output_columns()[b.producer_output].name;
      } else {
        in["value"] = b.value;
        if (!b.source.empty()) in["source"] = b.source;
      }
      inputs.push_back(std::move(in));
    }
    json outputs = json::array();
    for (const auto& c : n.fn->output_columns()) outputs.push_back({{"name", c.name}, {"unit", c.unit}});
    json j = {{"id", n.id},
              {"role", n.role == NodeRole::Component ? "component" : "aggregate"},
              {"level", n.level},
              {"inputs", inputs},
              {"outputs", outputs}};
    if (n.kind) j["kind"] = std::string(to_string(*n.kind));
    nodes.push_back(std::move(j));
  }
  json edges = json::array();
  for (const auto& e : edges_) {
    edges.push_back(
        {{"from", e.producer}, {"output", e.output}, {"to", e.consumer}, {"input", e.input}, {"unit", e.unit}});
  }
  json order = json::array();
  for (std::size_t i : order_) order.push_back(nodes_[i].id);
  return {{"nodes", nodes},
          {"edges", edges},
          {"order", order},
          {"result", has_result_ ? json{{"node", nodes_[result_node_].id},
                                        {"output", nodes_[result_node_].fn->output_columns()[result_output_].name}}
                                 : json(nullptr)}};
}

IntensityModel::IntensityModel(std::string load_name)
    : inputs_{{load_name, units::kLoad}, {"floor_area", "m2"}, {"operating_hours", "h"}},
      outputs_{{std::move(load_name), units::kIntensityLoad}} {}

std::vector<double> IntensityModel::predict(std::span<const double> x) const {
  if (x.size() != 3) throw ValidationError("intensity conversion expects 3 inputs");
  return {load_intensity(x[0], x[1], x[2])};
}

namespace {

std::shared_ptr<const Regressor> shared_model(const ModelBundle& bundle, ComponentKind k) {
  const auto it = bundle.models.find(k);
  if (it == bundle.models.end() || !it->second) {
    throw StructuralError("model bundle has no model for component '" + std::string(to_string(k)) + "'");
  }
  return it->second;
}

const char* kFlowInputs[5] = {"wall_heat_flow", "window_heat_flow", "floor_heat_flow", "roof_heat_flow",
                              "infiltration_heat_flow"};

}  // namespace

CompositionGraph build_graph(const DesignConfig& config, const GeometrySummary& geometry, const ModelBundle& bundle) {
  CompositionGraph g;
  const auto instances = element_instances(config, geometry);

  std::array<std::vector<std::string>, 5> members;
  for (const auto& inst : instances) {
    g.add_node({inst.id, NodeRole::Component, 1, inst.kind, shared_model(bundle, inst.kind)});
    const auto& cols = schema(inst.kind).inputs;
    for (std::size_t j = 0; j < cols.size(); ++j) g.bind(inst.id, cols[j].name, inst.inputs[j], inst.sources[j]);
    members[static_cast<std::size_t>(inst.kind)].push_back(inst.id);
  }

  // Per-kind sums keep individual element flows visible in the trace.
  for (std::size_t k = 0; k < 5; ++k) {
    const auto kind = static_cast<ComponentKind>(k);
    const std::string id = "sum." + std::string(to_string(kind));
    std::vector<Column> in;
    for (const auto& m : members[k]) in.push_back({m, units::kAverageFlow});
    auto fn = std::make_shared<AffineModel>(in, std::vector<Column>{{kFlowInputs[k], units::kAverageFlow}},
                                            std::vector<std::vector<double>>{std::vector<double>(in.size(), 1.0)},
                                            std::vector<double>{0.0});
    g.add_node({id, NodeRole::Aggregate, 1, std::nullopt, fn});
    for (const auto& m : members[k]) g.connect(m, "heat_flow", id, m);
  }

  const auto statics = zone_load_statics(config, geometry);
  const char* static_sources[6] = {"geometry.total_floor_area", "config.internal_mass_capacity", "config.light_gain",
                                   "config.equipment_gain",     "config.operating_hours",        "config.occupancy_density"};
  const std::pair<const char*, ComponentKind> zones[2] = {{"zone.heating", ComponentKind::ZoneHeating},
                                                          {"zone.cooling", ComponentKind::ZoneCooling}};
  for (const auto& [id, kind] : zones) {
    g.add_node({id, NodeRole::Component, 2, kind, shared_model(bundle, kind)});
    const auto& cols = schema(kind).inputs;
    g.bind(id, cols[0].name, statics[0], static_sources[0]);
    for (std::size_t k = 0; k < 5; ++k) {
      g.connect("sum." + std::string(to_string(static_cast<ComponentKind>(k))), kFlowInputs[k], id, kFlowInputs[k]);
    }
    for (std::size_t j = 1; j < statics.size(); ++j) g.bind(id, cols[5 + j].name, statics[j], static_sources[j]);
  }
  {
    const auto in = zone_lighting_inputs(config, geometry);
    const char* sources[5] = {"geometry.total_floor_area", "config.light_gain", "config.operating_hours",
                              "geometry.total_window_area", "config.g_value"};
    g.add_node({"zone.lighting", NodeRole::Component, 2, ComponentKind::ZoneLighting,
                shared_model(bundle, ComponentKind::ZoneLighting)});
    const auto& cols = schema(ComponentKind::ZoneLighting).inputs;
    for (std::size_t j = 0; j < cols.size(); ++j) g.bind("zone.lighting", cols[j].name, in[j], sources[j]);
  }

  const std::pair<const char*, const char*> loads[3] = {
      {"heating", "heating_load"}, {"cooling", "cooling_load"}, {"lighting", "lighting_load"}};
  g.add_node({"building", NodeRole::Component, 3, ComponentKind::BuildingEnergy,
              shared_model(bundle, ComponentKind::BuildingEnergy)});
  for (const auto& [zone, load] : loads) {
    const std::string id = std::string("intensity.") + zone;
    g.add_node({id, NodeRole::Aggregate, 2, std::nullopt, std::make_shared<IntensityModel>(load)});
    g.connect(std::string("zone.") + zone, load, id, load);
    g.bind(id, "floor_area", geometry.total_floor_area, "geometry.total_floor_area");
    g.bind(id, "operating_hours", config.operating_hours, "config.operating_hours");
    g.connect(id, load, "building", load);
  }
  g.bind("building", "boiler_efficiency", config.boiler_efficiency, "config.boiler_efficiency");
  g.bind("building", "cop_heating", config.cop_heating, "config.cop_heating");
  g.bind("building", "cop_cooling", config.cop_cooling, "config.cop_cooling");
  g.set_result("building", "eui");
  g.finalize();
  return g;
}

Evaluation predict_design(const DesignConfig& config, const BuildingShape& shape, const ModelBundle& bundle) {
  const auto geometry = derive_geometry(config, shape.footprint_for(config));
  return build_graph(config, geometry, bundle).evaluate();
}

}  // namespace cbml
