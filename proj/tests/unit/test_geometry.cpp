#include <gtest/gtest.h>

#include <cmath>

#include "cbml/geometry.hpp"
#include "cbml/sampling.hpp"
#include "cbml/util.hpp"

using namespace cbml;

namespace {

DesignConfig box_config(double length, double width, double height, int floors, double wwr, double orientation) {
  DesignConfig c;
  c.length = length;
  c.width = width;
  c.floor_height = height;
  c.num_floors = floors;
  c.wwr_north = c.wwr_east = c.wwr_south = c.wwr_west = wwr;
  c.orientation = orientation;
  return c;
}

std::size_t idx(Cardinal c) { return static_cast<std::size_t>(c); }

}  // namespace

TEST(Geometry, BoxSouthFacadeAreas) {
  const auto c = box_config(20, 10, 3, 2, 0.3, 0);
  const auto g = derive_geometry(c, Footprint::box(20, 10, 2));
  EXPECT_NEAR(g.gross_wall_area[idx(Cardinal::South)], 120.0, 1e-9);
  EXPECT_NEAR(g.window_area[idx(Cardinal::South)], 36.0, 1e-9);
  EXPECT_NEAR(g.wall_area[idx(Cardinal::South)], 84.0, 1e-9);
  EXPECT_NEAR(g.gross_wall_area[idx(Cardinal::East)], 60.0, 1e-9);
}

TEST(Geometry, QuarterTurnMovesSouthFacadeToWest) {
  const auto a = derive_geometry(box_config(20, 10, 3, 2, 0.3, 0), Footprint::box(20, 10, 2));
  const auto b = derive_geometry(box_config(20, 10, 3, 2, 0.3, 90), Footprint::box(20, 10, 2));
  // Clockwise rotation by 90 degrees: S -> W, W -> N, N -> E, E -> S.
  EXPECT_DOUBLE_EQ(b.gross_wall_area[idx(Cardinal::West)], a.gross_wall_area[idx(Cardinal::South)]);
  EXPECT_DOUBLE_EQ(b.gross_wall_area[idx(Cardinal::North)], a.gross_wall_area[idx(Cardinal::West)]);
  EXPECT_DOUBLE_EQ(b.gross_wall_area[idx(Cardinal::East)], a.gross_wall_area[idx(Cardinal::North)]);
  EXPECT_DOUBLE_EQ(b.gross_wall_area[idx(Cardinal::South)], a.gross_wall_area[idx(Cardinal::East)]);
}

TEST(Geometry, SetbackRoofSegmentsConserveGroundShadow) {
  Footprint fp;
  fp.plates.push_back({0, {{0, 0}, {20, 0}, {20, 20}, {0, 20}}});
  fp.plates.push_back({1, {{0, 0}, {20, 0}, {20, 10}, {0, 10}}});
  auto c = box_config(20, 20, 3, 2, 0.3, 0);
  const auto g = derive_geometry(c, fp);
  ASSERT_EQ(g.roof_segments.size(), 2u);
  EXPECT_EQ(g.roof_segments[0].level, 1);
  EXPECT_NEAR(g.roof_segments[0].area, 200.0, 1e-9);
  EXPECT_EQ(g.roof_segments[1].level, 2);
  EXPECT_NEAR(g.roof_segments[1].area, 200.0, 1e-9);
  EXPECT_NEAR(g.total_roof_area(), g.ground_area, 1e-9);
}

TEST(Geometry, EnvelopeAndCompactnessIdentities) {
  const auto c = box_config(27.5, 13.0, 3.2, 3, 0.25, 10);
  const auto g = derive_geometry(c, Footprint::box(27.5, 13.0, 3));
  double walls = 0.0;
  for (double a : g.gross_wall_area) walls += a;
  EXPECT_NEAR(g.envelope_area, walls + g.total_roof_area() + g.ground_area, 1e-9);
  EXPECT_NEAR(g.compactness, g.envelope_area / g.volume, 1e-12);
  const double closed = 2 * 3.2 * 3 * (27.5 + 13.0) + 2 * 27.5 * 13.0;
  EXPECT_NEAR(g.envelope_area, closed, 1e-9);
}

TEST(Geometry, FullTurnIsBitIdentical) {
  const auto a = derive_geometry(box_config(18, 24, 3.5, 4, 0.3, 0), Footprint::box(18, 24, 4));
  const auto b = derive_geometry(box_config(18, 24, 3.5, 4, 0.3, 360), Footprint::box(18, 24, 4));
  EXPECT_TRUE(a == b);
}

TEST(Geometry, WindowsNeverExceedGrossWalls) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto c = box_config(rng.uniform(12, 30), rng.uniform(12, 30), rng.uniform(3, 4), 1 + static_cast<int>(rng.index(5)),
                        0.0, rng.uniform(0, 360));
    c.wwr_north = rng.uniform();
    c.wwr_east = rng.uniform();
    c.wwr_south = rng.uniform();
    c.wwr_west = rng.uniform();
    const auto g = derive_geometry(c, Footprint::box(c.length, c.width, c.num_floors));
    double win = 0.0, gross = 0.0;
    for (auto k : kCardinals) {
      win += g.window_area[idx(k)];
      gross += g.gross_wall_area[idx(k)];
      EXPECT_GE(g.wall_area[idx(k)], 0.0);
    }
    EXPECT_LE(win, gross + 1e-9);
    EXPECT_GT(g.volume, 0.0);
  }
}

TEST(Geometry, NearestCardinalTieBreaks) {
  EXPECT_EQ(nearest_cardinal(0.0), Cardinal::North);
  EXPECT_EQ(nearest_cardinal(45.0), Cardinal::North);
  EXPECT_EQ(nearest_cardinal(135.0), Cardinal::East);
  EXPECT_EQ(nearest_cardinal(180.0), Cardinal::South);
  EXPECT_EQ(nearest_cardinal(-90.0), Cardinal::West);
}

TEST(Geometry, ValidateConfigRanges) {
  const auto space = ParameterSpace::standard();
  DesignConfig c;
  c.u_wall = 0.20;
  EXPECT_TRUE(validate_config(c, space).empty());
  c.u_wall = 0.30;
  const auto v = validate_config(c, space);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "u_wall");
  EXPECT_DOUBLE_EQ(v[0].min, 0.15);
  EXPECT_DOUBLE_EQ(v[0].max, 0.25);
}

TEST(Geometry, RepresentativeCaseIsValid) {
  // Representative case: 27.5 m square, 4 floors of 3.5 m, 22.5 degrees.
  const DesignConfig c;
  EXPECT_DOUBLE_EQ(c.length, 27.5);
  EXPECT_EQ(c.num_floors, 4);
  EXPECT_TRUE(validate_config(c, ParameterSpace::standard()).empty());
}

TEST(Geometry, ConfigChecks) {
  DesignConfig c;
  c.heating_setpoint = 27.0;
  EXPECT_THROW(check_config(c), ValidationError);
  c = DesignConfig{};
  c.num_floors = 0;
  EXPECT_THROW(check_config(c), ValidationError);
}

TEST(Geometry, ConfigJsonRoundTripAndMissingField) {
  DesignConfig c;
  c.u_wall = 0.17;
  c.num_floors = 3;
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
  auto j = config_to_json(c);
  j.erase("u_wall");
  try {
    config_from_json(j);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("u_wall"), std::string::npos);
  }
}

TEST(Geometry, ShapeJsonRoundTrip) {
  const auto s = BuildingShape::setback(0.4);
  const auto back = shape_from_json(shape_to_json(s));
  EXPECT_EQ(back.kind, BuildingShape::Kind::Setback);
  EXPECT_DOUBLE_EQ(back.setback_fraction, 0.4);
  const auto fp = Footprint::box(10, 12, 3);
  EXPECT_EQ(footprint_from_json(footprint_to_json(fp)), fp);
}
