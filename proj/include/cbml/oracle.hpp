#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cbml/geometry.hpp"

namespace cbml {

inline constexpr std::size_t kHoursPerYear = 8760;

// Fixed model constants of the reference simulator.
namespace physics {
inline constexpr double kAirHeatCapacity = 1200.0;       // J/m3K
inline constexpr double kSolarAbsorptance = 0.6;         // sol-air alpha
inline constexpr double kExteriorFilmCoefficient = 25.0; // W/m2K
inline constexpr double kSlabThickness = 0.2;            // m
inline constexpr double kGroundTemperature = 10.0;       // degC
inline constexpr double kGainPerPerson = 90.0;           // W
inline constexpr double kDaylightCoefficient = 0.2;
inline constexpr double kDaylightCap = 0.5;
inline constexpr double kOperationStartHour = 7.0;       // operation runs from 07:00
inline constexpr double kTimeStep = 3600.0;              // s
}  // namespace physics

// Irradiance channels. Horizontal drives roofs.
enum class SkyDirection { North = 0, East = 1, South = 2, West = 3, Horizontal = 4 };

struct WeatherSeries {
  std::vector<double> outdoor_temperature;                // degC
  std::array<std::vector<double>, 5> irradiance;          // W/m2 per SkyDirection

  const std::vector<double>& irradiance_for(SkyDirection d) const {
    return irradiance[static_cast<std::size_t>(d)];
  }
};

// Presets: "temperate-default".
WeatherSeries synth_weather(std::string_view preset);

// Calendar of the simulated year: hour 0 is Monday 00:00.
bool is_weekday(std::size_t hour_of_year);
// Fraction of the hour inside the operating window (0 on weekends).
double operating_fraction(std::size_t hour_of_year, double operating_hours);

enum class ElementKind { Wall, Window, Roof, Floor, Infiltration };

std::string_view to_string(ElementKind k);

struct ElementSeries {
  std::string id;  // "wall.S", "window.E", "roof.L4", "floor", "infiltration"
  ElementKind kind = ElementKind::Wall;
  std::optional<Cardinal> orientation;
  int level = 0;  // roof segments only
  double area = 0.0;
  std::vector<double> flow;  // W, positive = heat gain to the zone
};

struct SimulationResult {
  std::vector<ElementSeries> elements;
  std::vector<double> internal_gain;  // W
  std::vector<double> heating;        // W
  std::vector<double> cooling;        // W
  std::vector<double> lighting;       // W
  std::vector<double> indoor_temperature;  // degC at the start of each hour, plus the final state
  std::vector<double> operating;      // operating fraction per hour
  double capacitance = 0.0;           // J/K
  double total_floor_area = 0.0;
  double annual_heating = 0.0;        // kWh/a
  double annual_cooling = 0.0;
  double annual_lighting = 0.0;
  double annual_final_energy = 0.0;
  double eui = 0.0;                   // kWh/m2a
  double boiler_efficiency = 1.0;
  double cop_heating = 1.0;
  double cop_cooling = 1.0;

  const ElementSeries* find(std::string_view id) const;
};

SimulationResult simulate(const DesignConfig& config, const GeometrySummary& geometry, const WeatherSeries& weather);

struct ElementAverage {
  std::string id;
  ElementKind kind = ElementKind::Wall;
  std::optional<Cardinal> orientation;
  int level = 0;
  double area = 0.0;
  double mean_flow = 0.0;  // W_avg over the year

  bool operator==(const ElementAverage&) const = default;
};

// Point quantities used as component interfaces.
struct PointSummary {
  std::vector<ElementAverage> elements;
  double heating_load = 0.0;   // W, mean over occupied hours
  double cooling_load = 0.0;   // W, mean over occupied hours
  double lighting_load = 0.0;  // W, mean over occupied hours
  double occupied_hours = 0.0; // h/a
  double annual_heating = 0.0; // kWh/a
  double annual_cooling = 0.0;
  double annual_lighting = 0.0;
  double annual_final_energy = 0.0;
  double total_floor_area = 0.0;
  double eui = 0.0;            // kWh/m2a

  const ElementAverage* find(std::string_view id) const;
  // Sum of mean flows of every element of one kind.
  double total_flow(ElementKind kind) const;

  bool operator==(const PointSummary&) const = default;
};

PointSummary aggregate(const SimulationResult& result);

// Occupied hours per year for a given daily operating window.
double annual_occupied_hours(double operating_hours);

nlohmann::json summary_to_json(const PointSummary& s);
PointSummary summary_from_json(const nlohmann::json& j);

// Hour index + W columns, one row per hour.
std::string element_series_csv(const ElementSeries& e);

}  // namespace cbml
