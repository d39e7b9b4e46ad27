#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "cbml/baseline.hpp"
#include "helpers.hpp"

using namespace cbml;

TEST(Monolithic, BoxCompactnessArithmetic) {
  DesignConfig c;
  c.length = c.width = 20.0;
  c.floor_height = 3.5;
  c.num_floors = 4;
  const auto g = derive_geometry(c, Footprint::box(20, 20, 4));
  EXPECT_NEAR(g.volume, 5600.0, 1e-9);
  EXPECT_NEAR(g.envelope_area, 1920.0, 1e-9);
  EXPECT_NEAR(relative_compactness(g), 2.9167, 5e-5);
  EXPECT_NEAR(shape_factor(g), 1920.0 / 5600.0, 1e-12);
}

TEST(Monolithic, CubeCompactnessIsSideOverSix) {
  for (double s : {6.0, 12.0, 21.0}) {
    DesignConfig c;
    c.length = c.width = s;
    c.floor_height = s / 3.0;
    c.num_floors = 3;
    const auto g = derive_geometry(c, Footprint::box(s, s, 3));
    EXPECT_NEAR(relative_compactness(g), s / 6.0, 1e-12);
  }
}

TEST(Monolithic, FeatureOrderMatchesGoldenFile) {
  std::ifstream in(std::filesystem::path(CBML_GOLDEN_DIR) / "monolithic_features.json");
  ASSERT_TRUE(in);
  const auto golden = nlohmann::json::parse(in);
  EXPECT_EQ(golden.at("version"), kMonolithicFeatureVersion);
  const auto& cols = monolithic_feature_columns();
  ASSERT_EQ(golden.at("features").size(), cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    EXPECT_EQ(golden["features"][i]["name"], cols[i].name);
    EXPECT_EQ(golden["features"][i]["unit"], cols[i].unit);
  }
}

TEST(Monolithic, EqualCompactnessGivesEqualFeatures) {
  // Two mirrored L outlines: same area, volume and envelope, different
  // facade orientations.
  DesignConfig c;
  c.num_floors = 2;
  c.floor_height = 3.0;
  const auto l_shape = Footprint::extruded({{0, 0}, {20, 0}, {20, 10}, {10, 10}, {10, 20}, {0, 20}}, 2);
  const auto mirrored = Footprint::extruded({{0, 0}, {20, 0}, {20, 20}, {10, 20}, {10, 10}, {0, 10}}, 2);
  const auto ga = derive_geometry(c, l_shape);
  const auto gb = derive_geometry(c, mirrored);
  EXPECT_NEAR(relative_compactness(ga), relative_compactness(gb), 1e-12);
  const auto fa = featurize(c, ga);
  const auto fb = featurize(c, gb);
  ASSERT_EQ(fa.size(), fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_NEAR(fa[i], fb[i], 1e-9) << monolithic_feature_columns()[i].name;
}

TEST(Monolithic, RepresentativeFeatureVector) {
  const DesignConfig c;
  const auto g = derive_geometry(c, Footprint::box(c.length, c.width, c.num_floors));
  const auto f = featurize(c, g);
  const auto& cols = monolithic_feature_columns();
  ASSERT_EQ(f.size(), cols.size());
  EXPECT_GE(f.size(), 20u);
  auto at = [&](const std::string& name) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i].name == name) return f[i];
    }
    throw std::runtime_error("no feature " + name);
  };
  EXPECT_NEAR(at("floor_area"), 27.5 * 27.5 * 4, 1e-9);
  EXPECT_EQ(at("u_wall"), 0.2);
  EXPECT_EQ(at("internal_mass"), 90000.0);
  EXPECT_EQ(at("num_floors"), 4.0);
}

TEST(Monolithic, ZeroEnvelopeRejected) {
  GeometrySummary g;
  EXPECT_THROW(relative_compactness(g), ValidationError);
}

class TrainedMonolithic : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    auto cfg = cbml::testing::tiny_training();
    cfg.hidden_widths = {16};
    cfg.max_epochs = 300;
    cfg.patience = 30;
    model_ = new MlpModel(train_monolithic(cbml::testing::simulated_boxes(80, 41), cfg));
  }
  static void TearDownTestSuite() { delete model_; }
  static MlpModel* model_;
};

MlpModel* TrainedMonolithic::model_ = nullptr;

TEST_F(TrainedMonolithic, SetpointsAreDroppedAsConstant) {
  const auto& dropped = model_->dropped_features();
  EXPECT_NE(std::find(dropped.begin(), dropped.end(), "heating_setpoint"), dropped.end());
  EXPECT_NE(std::find(dropped.begin(), dropped.end(), "cooling_setpoint"), dropped.end());
  EXPECT_EQ(model_->input_columns().size() + dropped.size(), monolithic_feature_columns().size());
}

TEST_F(TrainedMonolithic, PredictionIsDeterministic) {
  const DesignConfig c;
  const auto g = derive_geometry(c, Footprint::box(c.length, c.width, c.num_floors));
  const auto a = predict_monolithic(*model_, c, g);
  const auto b = predict_monolithic(*model_, c, g);
  EXPECT_EQ(a.annual_energy, b.annual_energy);
  EXPECT_DOUBLE_EQ(a.eui, a.annual_energy / g.total_floor_area);
  EXPECT_TRUE(a.warnings.empty());
}

TEST_F(TrainedMonolithic, OutOfRangeConfigWarnsButPredicts) {
  DesignConfig c;
  c.u_wall = 0.4;
  const auto g = derive_geometry(c, Footprint::box(c.length, c.width, c.num_floors));
  const auto p = predict_monolithic(*model_, c, g);
  ASSERT_EQ(p.warnings.size(), 1u);
  EXPECT_EQ(p.warnings[0].field, "u_wall");
  EXPECT_TRUE(std::isfinite(p.annual_energy));
}
