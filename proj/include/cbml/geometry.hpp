#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cbml {

enum class Cardinal { North = 0, East = 1, South = 2, West = 3 };

inline constexpr std::array<Cardinal, 4> kCardinals{Cardinal::North, Cardinal::East, Cardinal::South,
                                                    Cardinal::West};

std::string_view to_string(Cardinal c);
// Single-letter tag used in node ids and column names ("N", "E", "S", "W").
std::string_view short_name(Cardinal c);
// Azimuth of the outward normal, clockwise from North.
double azimuth_deg(Cardinal c);
// Nearest cardinal direction; ties go to North, then East, then South.
Cardinal nearest_cardinal(double azimuth_deg);

// One building variant. Defaults are the representative office case.
struct DesignConfig {
  double length = 27.5;                 // m, extent along x (East-West)
  double width = 27.5;                  // m, extent along y (North-South)
  double floor_height = 3.5;            // m
  double orientation = 22.5;            // degrees, clockwise rotation of the footprint
  int num_floors = 4;
  double u_wall = 0.2;                  // W/m2K
  double u_ground = 0.2;                // W/m2K
  double u_roof = 0.2;                  // W/m2K
  double u_internal_floor = 0.5;        // W/m2K
  double u_window = 0.85;               // W/m2K
  double g_value = 0.45;                // -
  double slab_heat_capacity = 900.0;    // J/m3K
  double internal_mass_capacity = 90.0; // kJ/m2K
  double permeability = 7.5;            // m3/m2h
  double wwr_north = 0.3;
  double wwr_east = 0.3;
  double wwr_south = 0.3;
  double wwr_west = 0.3;
  double boiler_efficiency = 0.95;
  double cop_heating = 3.5;
  double cop_cooling = 3.5;
  double operating_hours = 11.0;        // h/day
  double light_gain = 8.0;              // W/m2
  double equipment_gain = 12.0;         // W/m2
  double occupancy_density = 20.0;      // m2/person
  double heating_setpoint = 20.0;       // degC
  double cooling_setpoint = 26.0;       // degC

  double wwr(Cardinal c) const;

  bool operator==(const DesignConfig&) const = default;
};

// Name-based access to DesignConfig fields (used by samplers, config files,
// sensitivity plans and the HTTP schema).
struct ConfigField {
  std::string_view name;
  std::string_view unit;
  bool integer;
};

const std::vector<ConfigField>& config_fields();
const ConfigField* find_config_field(std::string_view name);
double get_field(const DesignConfig& config, std::string_view name);
void set_field(DesignConfig& config, std::string_view name, double value);

// Throws ValidationError on structural invariant violations (setpoint order,
// floor count, non-finite values).
void check_config(const DesignConfig& config);

nlohmann::json config_to_json(const DesignConfig& config);
// Missing fields are an error naming the field unless allow_defaults is set.
DesignConfig config_from_json(const nlohmann::json& j, bool allow_defaults = false);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

struct Plate {
  int level = 0;
  std::vector<Point2> vertices;  // counter-clockwise, meters
  bool operator==(const Plate&) const = default;
};

struct Footprint {
  std::vector<Plate> plates;

  static Footprint box(double length, double width, int floors);
  // Identical plates on every level, built from one outline.
  static Footprint extruded(const std::vector<Point2>& outline, int floors);

  bool operator==(const Footprint&) const = default;
};

double polygon_area(const std::vector<Point2>& vertices);

nlohmann::json footprint_to_json(const Footprint& fp);
Footprint footprint_from_json(const nlohmann::json& j);

// How a footprint follows the design variables. Box and setback shapes are
// regenerated from length/width/num_floors so geometry variables can be
// perturbed; custom footprints are fixed.
struct BuildingShape {
  enum class Kind { Box, Setback, Custom };
  Kind kind = Kind::Box;
  // Setback: the top floor keeps this fraction of the width (southern part).
  double setback_fraction = 0.5;
  Footprint custom;

  static BuildingShape box() { return {}; }
  static BuildingShape setback(double fraction = 0.5) { return {Kind::Setback, fraction, {}}; }
  static BuildingShape from_footprint(Footprint fp) { return {Kind::Custom, 0.5, std::move(fp)}; }

  Footprint footprint_for(const DesignConfig& config) const;
};

nlohmann::json shape_to_json(const BuildingShape& shape);
BuildingShape shape_from_json(const nlohmann::json& j);

struct RoofSegment {
  int level = 0;  // level the roof sits on top of plus one (top of plate k is level k+1)
  double area = 0.0;
  bool operator==(const RoofSegment&) const = default;
};

struct GeometrySummary {
  std::array<double, 4> gross_wall_area{};  // indexed by Cardinal
  std::array<double, 4> wall_area{};        // net of windows
  std::array<double, 4> window_area{};
  std::vector<RoofSegment> roof_segments;
  double ground_area = 0.0;
  double internal_floor_area = 0.0;
  double total_floor_area = 0.0;
  double volume = 0.0;
  double envelope_area = 0.0;
  double compactness = 0.0;  // envelope / volume, m2/m3
  double building_height = 0.0;

  double total_window_area() const;
  double total_roof_area() const;

  bool operator==(const GeometrySummary&) const = default;
};

GeometrySummary derive_geometry(const DesignConfig& config, const Footprint& footprint);

nlohmann::json geometry_to_json(const GeometrySummary& g);

}  // namespace cbml
