#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cbml/composition.hpp"
#include "helpers.hpp"

using namespace cbml;
using cbml::testing::affine_bundle;
using cbml::testing::hand_chained_eui;

namespace {

std::shared_ptr<AffineModel> scalar_affine(const std::string& in, const std::string& out, double w, double b) {
  return std::make_shared<AffineModel>(std::vector<Column>{{in, "W"}}, std::vector<Column>{{out, "W"}},
                                       std::vector<std::vector<double>>{{w}}, std::vector<double>{b});
}

GeometrySummary box_geometry(const DesignConfig& c) {
  return derive_geometry(c, Footprint::box(c.length, c.width, c.num_floors));
}

}  // namespace

TEST(Graph, ToyNestedComposition) {
  CompositionGraph g;
  g.add_node({"g1", NodeRole::Component, 1, std::nullopt, scalar_affine("x", "q", 2.0, 0.0)});
  g.add_node({"g2", NodeRole::Component, 2, std::nullopt, scalar_affine("q", "y", 1.0, 1.0)});
  g.bind("g1", "x", 3.0);
  g.connect("g1", "q", "g2", "q");
  g.set_result("g2", "y");
  g.finalize();
  const auto e = g.evaluate();
  EXPECT_DOUBLE_EQ(e.output, 7.0);
  EXPECT_DOUBLE_EQ(e.value("g1", "q"), 6.0);
  ASSERT_EQ(e.trace.size(), 2u);
  EXPECT_EQ(e.trace[0].node, "g1");
}

TEST(Graph, RejectsUnitMismatchUnboundInputsAndCycles) {
  {
    CompositionGraph g;
    g.add_node({"a", NodeRole::Component, 1, std::nullopt, scalar_affine("x", "q", 1, 0)});
    auto kw = std::make_shared<AffineModel>(std::vector<Column>{{"q", "kW"}}, std::vector<Column>{{"y", "kW"}},
                                            std::vector<std::vector<double>>{{1.0}}, std::vector<double>{0.0});
    g.add_node({"b", NodeRole::Component, 2, std::nullopt, kw});
    g.bind("a", "x", 1.0);
    EXPECT_THROW(g.connect("a", "q", "b", "q"), StructuralError);
  }
  {
    CompositionGraph g;
    g.add_node({"a", NodeRole::Component, 1, std::nullopt, scalar_affine("x", "q", 1, 0)});
    g.set_result("a", "q");
    EXPECT_THROW(g.finalize(), StructuralError);
  }
  {
    CompositionGraph g;
    g.add_node({"a", NodeRole::Component, 1, std::nullopt, scalar_affine("x", "x", 1, 0)});
    g.add_node({"b", NodeRole::Component, 1, std::nullopt, scalar_affine("x", "x", 1, 0)});
    g.connect("a", "x", "b", "x");
    g.connect("b", "x", "a", "x");
    g.set_result("a", "x");
    EXPECT_THROW(g.finalize(), StructuralError);
  }
}

TEST(Graph, NonFiniteActivationNamesTheNode) {
  CompositionGraph g;
  g.add_node({"g1", NodeRole::Component, 1, std::nullopt, scalar_affine("x", "q", 1e308, 0.0)});
  g.add_node({"g2", NodeRole::Component, 2, std::nullopt, scalar_affine("q", "y", 1e308, 0.0)});
  g.bind("g1", "x", 10.0);
  g.connect("g1", "q", "g2", "q");
  g.set_result("g2", "y");
  g.finalize();
  try {
    g.evaluate();
    FAIL() << "expected an evaluation error";
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("g1"), std::string::npos);
  }
}

TEST(Graph, InsertionOrderDoesNotMatter) {
  auto build = [](bool reversed) {
    std::vector<GraphNode> nodes{{"a", NodeRole::Component, 1, std::nullopt, scalar_affine("x", "q", 2.0, 0.5)},
                                 {"b", NodeRole::Component, 1, std::nullopt, scalar_affine("x", "q", -1.0, 3.0)},
                                 {"c", NodeRole::Component, 2, std::nullopt,
                                  std::make_shared<AffineModel>(std::vector<Column>{{"p", "W"}, {"r", "W"}},
                                                                std::vector<Column>{{"y", "W"}},
                                                                std::vector<std::vector<double>>{{0.3, 0.7}},
                                                                std::vector<double>{1.0})}};
    if (reversed) std::reverse(nodes.begin(), nodes.end());
    CompositionGraph g;
    for (auto& n : nodes) g.add_node(n);
    g.bind("a", "x", 1.5);
    g.bind("b", "x", -2.0);
    g.connect("a", "q", "c", "p");
    g.connect("b", "q", "c", "r");
    g.set_result("c", "y");
    g.finalize();
    return g.evaluate();
  };
  const auto fwd = build(false);
  const auto rev = build(true);
  EXPECT_EQ(fwd.output, rev.output);
  EXPECT_EQ(fwd.trace, rev.trace);
}

TEST(BuildingGraph, BoxNodeCounts) {
  const DesignConfig c;
  const auto g = build_graph(c, box_geometry(c), affine_bundle(1));
  EXPECT_EQ(g.count(ComponentKind::Wall), 4u);
  EXPECT_EQ(g.count(ComponentKind::Window), 4u);
  EXPECT_EQ(g.count(ComponentKind::Floor), 1u);
  EXPECT_EQ(g.count(ComponentKind::Roof), 1u);
  EXPECT_EQ(g.count(ComponentKind::Infiltration), 1u);
  EXPECT_EQ(g.count(ComponentKind::ZoneHeating) + g.count(ComponentKind::ZoneCooling) +
                g.count(ComponentKind::ZoneLighting),
            3u);
  EXPECT_EQ(g.count(ComponentKind::BuildingEnergy), 1u);
  EXPECT_EQ(g.component_node_count(), 15u);
}

TEST(BuildingGraph, SetbackHasTwoRoofNodesFeedingTheSum) {
  const DesignConfig c;
  const auto geometry = derive_geometry(c, BuildingShape::setback(0.5).footprint_for(c));
  const auto g = build_graph(c, geometry, affine_bundle(2));
  EXPECT_EQ(g.count(ComponentKind::Roof), 2u);
  std::size_t into_sum = 0;
  for (const auto& e : g.edges()) into_sum += e.consumer == "sum.roof" && e.producer.rfind("roof.", 0) == 0;
  EXPECT_EQ(into_sum, 2u);
}

TEST(BuildingGraph, ZeroWindowRatioElidesTheNode) {
  DesignConfig c;
  c.wwr_north = 0.0;
  const auto g = build_graph(c, box_geometry(c), affine_bundle(3));
  EXPECT_EQ(g.count(ComponentKind::Window), 3u);
  EXPECT_THROW(g.node("window.N"), StructuralError);
}

TEST(BuildingGraph, EdgesCarryMatchingUnits) {
  const DesignConfig c;
  const auto g = build_graph(c, box_geometry(c), affine_bundle(4));
  for (const auto& e : g.edges()) {
    const auto& prod = g.node(e.producer).fn->output_columns();
    const auto& cons = g.node(e.consumer).fn->input_columns();
    const auto p = std::find_if(prod.begin(), prod.end(), [&](const Column& x) { return x.name == e.output; });
    const auto q = std::find_if(cons.begin(), cons.end(), [&](const Column& x) { return x.name == e.input; });
    ASSERT_NE(p, prod.end());
    ASSERT_NE(q, cons.end());
    EXPECT_EQ(p->unit, e.unit);
    EXPECT_EQ(q->unit, e.unit);
  }
}

TEST(BuildingGraph, MatchesHandChainedEvaluation) {
  const DesignConfig c;
  const auto bundle = affine_bundle(5);
  const auto geometry = box_geometry(c);
  const double expected = hand_chained_eui(c, geometry, bundle);
  const auto e = build_graph(c, geometry, bundle).evaluate();
  EXPECT_NEAR(e.output, expected, 1e-9 * std::max(1.0, std::abs(expected)));
  EXPECT_EQ(e.unit, "kWh/m2a");
}

TEST(BuildingGraph, RandomLinearBundlesMatchClosedForm) {
  Rng rng(31);
  const auto configs = lhs_samples(ParameterSpace::standard(), 50, 77);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto bundle = affine_bundle(1000 + i, rng.uniform(0.1, 2.0));
    const auto shape = i % 2 ? BuildingShape::setback(rng.uniform(0.3, 0.7)) : BuildingShape::box();
    const auto geometry = derive_geometry(configs[i], shape.footprint_for(configs[i]));
    const double expected = hand_chained_eui(configs[i], geometry, bundle);
    const double got = build_graph(configs[i], geometry, bundle).evaluate().output;
    ASSERT_NEAR(got, expected, 1e-9 * std::max(1.0, std::abs(expected))) << "design " << i;
  }
}

TEST(BuildingGraph, RepeatedEvaluationIsPure) {
  const DesignConfig c;
  const auto g = build_graph(c, box_geometry(c), affine_bundle(6));
  const auto a = g.evaluate();
  const auto b = g.evaluate();
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.output, b.output);
}

TEST(BuildingGraph, TraceExposesElementFlows) {
  const DesignConfig c;
  const auto e = predict_design(c, BuildingShape::box(), affine_bundle(7));
  EXPECT_NE(e.find("wall.S", "heat_flow"), nullptr);
  EXPECT_NE(e.find("sum.wall", "wall_heat_flow"), nullptr);
  EXPECT_NE(e.find("zone.heating", "heating_load"), nullptr);
  EXPECT_NE(e.find("intensity.cooling", "cooling_load"), nullptr);
  EXPECT_DOUBLE_EQ(e.value("sum.wall", "wall_heat_flow"),
                   e.value("wall.N", "heat_flow") + e.value("wall.E", "heat_flow") + e.value("wall.S", "heat_flow") +
                       e.value("wall.W", "heat_flow"));
  EXPECT_THROW(e.value("door", "heat_flow"), ValidationError);
}
