#include "cbml/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "cbml/util.hpp"

namespace cbml {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

}  // namespace

// Outdoor temperature:
//   T(d, h) = 10 + 10 cos(2 pi (d - 202) / 365) + 5 cos(2 pi (h - 15) / 24)
// Horizontal irradiance:
//   I_h(d, h) = 800 max(0, sin(pi (h - 6) / 12)) (0.6 + 0.4 cos(2 pi (d - 172) / 365))
// Facades, all zero whenever I_h is zero:
//   South = 0.75 I_h max(0, cos(pi (h - 12) / 12))   midday
//   East  =      I_h max(0, cos(pi (h - 9) / 6))     morning, zero after noon
//   West  =      I_h max(0, cos(pi (h - 15) / 6))    afternoon, zero before noon
//   North = 0.2  I_h                                 diffuse only
WeatherSeries synth_weather(std::string_view preset) {
  if (preset != "temperate-default") {
    throw ValidationError("unknown weather preset '" + std::string(preset) + "'");
  }
  WeatherSeries w;
  w.outdoor_temperature.resize(kHoursPerYear);
  for (auto& ch : w.irradiance) ch.resize(kHoursPerYear);
  for (std::size_t t = 0; t < kHoursPerYear; ++t) {
    const double d = static_cast<double>(t / 24);
    const double h = static_cast<double>(t % 24);
    w.outdoor_temperature[t] =
        10.0 + 10.0 * std::cos(kTwoPi * (d - 202.0) / 365.0) + 5.0 * std::cos(kTwoPi * (h - 15.0) / 24.0);
    // sin(pi) evaluates to ~1e-16; sunset hours must give exactly zero.
    double sun = std::sin(M_PI * (h - 6.0) / 12.0);
    if (sun < 1e-12) sun = 0.0;
    const double horizontal = 800.0 * sun * (0.6 + 0.4 * std::cos(kTwoPi * (d - 172.0) / 365.0));
    const double south = horizontal > 0.0 ? 0.75 * horizontal * std::max(0.0, std::cos(M_PI * (h - 12.0) / 12.0)) : 0.0;
    const double east = horizontal > 0.0 ? horizontal * std::max(0.0, std::cos(M_PI * (h - 9.0) / 6.0)) : 0.0;
    const double west = horizontal > 0.0 ? horizontal * std::max(0.0, std::cos(M_PI * (h - 15.0) / 6.0)) : 0.0;
    w.irradiance[static_cast<std::size_t>(SkyDirection::Horizontal)][t] = horizontal;
    w.irradiance[static_cast<std::size_t>(SkyDirection::South)][t] = south;
    w.irradiance[static_cast<std::size_t>(SkyDirection::East)][t] = east;
    w.irradiance[static_cast<std::size_t>(SkyDirection::West)][t] = west;
    w.irradiance[static_cast<std::size_t>(SkyDirection::North)][t] = 0.2 * horizontal;
  }
  return w;
}

bool is_weekday(std::size_t hour_of_year) { return (hour_of_year / 24) % 7 < 5; }

double operating_fraction(std::size_t hour_of_year, double operating_hours) {
  if (!is_weekday(hour_of_year)) return 0.0;
  const double h = static_cast<double>(hour_of_year % 24);
  const double start = physics::kOperationStartHour;
  const double end = start + operating_hours;
  return std::clamp(std::min(h + 1.0, end) - std::max(h, start), 0.0, 1.0);
}

double annual_occupied_hours(double operating_hours) {
  double total = 0.0;
  for (std::size_t t = 0; t < kHoursPerYear; ++t) total += operating_fraction(t, operating_hours);
  return total;
}

std::string_view to_string(ElementKind k) {
  switch (k) {
    case ElementKind::Wall: return "wall";
    case ElementKind::Window: return "window";
    case ElementKind::Roof: return "roof";
    case ElementKind::Floor: return "floor";
    case ElementKind::Infiltration: return "infiltration";
  }
  return "?";
}

const ElementSeries* SimulationResult::find(std::string_view id) const {
  for (const auto& e : elements) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

namespace {

SkyDirection sky_of(Cardinal c) { return static_cast<SkyDirection>(static_cast<int>(c)); }

// Linear coefficients of one element's flow: Q = conductance * (driver - T_in) + solar.
struct ElementModel {
  double conductance = 0.0;                  // W/K
  const std::vector<double>* irradiance = nullptr;
  double solair_factor = 0.0;                // K per W/m2 (opaque elements)
  double solar_aperture = 0.0;               // m2 (windows: g * A)
  bool ground = false;

  double flow(std::size_t t, double t_out, double t_in) const {
    if (ground) return conductance * (physics::kGroundTemperature - t_in);
    const double irr = irradiance ? (*irradiance)[t] : 0.0;
    return conductance * (t_out + solair_factor * irr - t_in) + solar_aperture * irr;
  }
};

}  // namespace

SimulationResult simulate(const DesignConfig& config, const GeometrySummary& geometry, const WeatherSeries& weather) {
  check_config(config);
  if (weather.outdoor_temperature.size() != kHoursPerYear) throw ValidationError("weather series must have 8760 hours");

  const double floor_area = geometry.total_floor_area;
  SimulationResult r;
  r.capacitance = config.internal_mass_capacity * 1000.0 * floor_area +
                  config.slab_heat_capacity * physics::kSlabThickness * floor_area;
  if (!(r.capacitance > 0.0)) throw ValidationError("non-positive zone capacitance");
  r.total_floor_area = floor_area;
  r.boiler_efficiency = config.boiler_efficiency;
  r.cop_heating = config.cop_heating;
  r.cop_cooling = config.cop_cooling;

  const double solair = physics::kSolarAbsorptance / physics::kExteriorFilmCoefficient;
  std::vector<ElementModel> models;
  auto add = [&](std::string id, ElementKind kind, std::optional<Cardinal> c, int level, double area,
                 ElementModel m) {
    ElementSeries e;
    e.id = std::move(id);
    e.kind = kind;
    e.orientation = c;
    e.level = level;
    e.area = area;
    e.flow.assign(kHoursPerYear, 0.0);
    r.elements.push_back(std::move(e));
    models.push_back(m);
  };

  for (auto c : kCardinals) {
    const auto i = static_cast<std::size_t>(c);
    const double a = geometry.wall_area[i];
    if (a > 0.0) {
      add("wall." + std::string(short_name(c)), ElementKind::Wall, c, 0, a,
          {config.u_wall * a, &weather.irradiance_for(sky_of(c)), solair, 0.0, false});
    }
  }
  for (auto c : kCardinals) {
    const auto i = static_cast<std::size_t>(c);
    const double a = geometry.window_area[i];
    if (a > 0.0) {
      add("window." + std::string(short_name(c)), ElementKind::Window, c, 0, a,
          {config.u_window * a, &weather.irradiance_for(sky_of(c)), 0.0, config.g_value * a, false});
    }
  }
  for (const auto& seg : geometry.roof_segments) {
    add("roof.L" + std::to_string(seg.level), ElementKind::Roof, std::nullopt, seg.level, seg.area,
        {config.u_roof * seg.area, &weather.irradiance_for(SkyDirection::Horizontal), solair, 0.0, false});
  }
  add("floor", ElementKind::Floor, std::nullopt, 0, geometry.ground_area,
      {config.u_ground * geometry.ground_area, nullptr, 0.0, 0.0, true});
  const double airflow = config.permeability * geometry.envelope_area / 3600.0;  // m3/s
  add("infiltration", ElementKind::Infiltration, std::nullopt, 0, geometry.envelope_area,
      {physics::kAirHeatCapacity * airflow, nullptr, 0.0, 0.0, false});

  const double gain_density =
      config.light_gain + config.equipment_gain + physics::kGainPerPerson / config.occupancy_density;
  const double daylight =
      1.0 - std::min(physics::kDaylightCap,
                     physics::kDaylightCoefficient * geometry.total_window_area() * config.g_value / floor_area);
  const double dt_over_c = physics::kTimeStep / r.capacitance;

  r.internal_gain.assign(kHoursPerYear, 0.0);
  r.heating.assign(kHoursPerYear, 0.0);
  r.cooling.assign(kHoursPerYear, 0.0);
  r.lighting.assign(kHoursPerYear, 0.0);
  r.operating.assign(kHoursPerYear, 0.0);
  r.indoor_temperature.assign(kHoursPerYear + 1, 0.0);

  // One warm-up year brings the zone to its periodic state; the second pass
  // is recorded.
  double t_in = config.heating_setpoint;
  for (int pass = 0; pass < 2; ++pass) {
    const bool record = pass == 1;
    for (std::size_t t = 0; t < kHoursPerYear; ++t) {
      const double t_out = weather.outdoor_temperature[t];
      const double frac = operating_fraction(t, config.operating_hours);
      double q_env = 0.0;
      for (std::size_t e = 0; e < models.size(); ++e) {
        const double q = models[e].flow(t, t_out, t_in);
        if (record) r.elements[e].flow[t] = q;
        q_env += q;
      }
      const double q_int = gain_density * floor_area * frac;
      const double t_free = t_in + dt_over_c * (q_env + q_int);
      double q_heat = 0.0;
      double q_cool = 0.0;
      if (frac > 0.0) {
        if (t_free < config.heating_setpoint) {
          q_heat = frac * (config.heating_setpoint - t_free) / dt_over_c;
        } else if (t_free > config.cooling_setpoint) {
          q_cool = frac * (t_free - config.cooling_setpoint) / dt_over_c;
        }
      }
      if (record) {
        r.indoor_temperature[t] = t_in;
        r.internal_gain[t] = q_int;
        r.heating[t] = q_heat;
        r.cooling[t] = q_cool;
        r.lighting[t] = config.light_gain * floor_area * daylight * frac;
        r.operating[t] = frac;
      }
      t_in = t_free + dt_over_c * (q_heat - q_cool);
    }
    if (record) r.indoor_temperature[kHoursPerYear] = t_in;
  }

  auto kwh = [](const std::vector<double>& w) {
    double s = 0.0;
    for (double v : w) s += v;
    return s / 1000.0;
  };
  r.annual_heating = kwh(r.heating);
  r.annual_cooling = kwh(r.cooling);
  r.annual_lighting = kwh(r.lighting);
  r.annual_final_energy = r.annual_heating / (config.boiler_efficiency * config.cop_heating) +
                          r.annual_cooling / config.cop_cooling + r.annual_lighting;
  r.eui = r.annual_final_energy / floor_area;
  return r;
}

const ElementAverage* PointSummary::find(std::string_view id) const {
  for (const auto& e : elements) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

double PointSummary::total_flow(ElementKind kind) const {
  double s = 0.0;
  for (const auto& e : elements) {
    if (e.kind == kind) s += e.mean_flow;
  }
  return s;
}

PointSummary aggregate(const SimulationResult& r) {
  PointSummary s;
  for (const auto& e : r.elements) {
    double sum = 0.0;
    for (double q : e.flow) sum += q;
    s.elements.push_back({e.id, e.kind, e.orientation, e.level, e.area,
                          e.flow.empty() ? 0.0 : sum / static_cast<double>(e.flow.size())});
  }
  double occupied = 0.0;
  for (double f : r.operating) occupied += f;
  s.occupied_hours = occupied;
  s.annual_heating = r.annual_heating;
  s.annual_cooling = r.annual_cooling;
  s.annual_lighting = r.annual_lighting;
  if (occupied > 0.0) {
    s.heating_load = r.annual_heating * 1000.0 / occupied;
    s.cooling_load = r.annual_cooling * 1000.0 / occupied;
    s.lighting_load = r.annual_lighting * 1000.0 / occupied;
  }
  s.annual_final_energy = r.annual_final_energy;
  s.total_floor_area = r.total_floor_area;
  s.eui = r.eui;
  return s;
}

nlohmann::json summary_to_json(const PointSummary& s) {
  nlohmann::json elements = nlohmann::json::array();
  for (const auto& e : s.elements) {
    nlohmann::json j{{"id", e.id}, {"kind", std::string(to_string(e.kind))}, {"area_m2", e.area},
                     {"mean_flow_w", e.mean_flow}};
    if (e.orientation) j["orientation"] = std::string(short_name(*e.orientation));
    if (e.kind == ElementKind::Roof) j["level"] = e.level;
    elements.push_back(j);
  }
  return {{"elements", elements},
          {"heating_load_w", s.heating_load},
          {"cooling_load_w", s.cooling_load},
          {"lighting_load_w", s.lighting_load},
          {"occupied_hours", s.occupied_hours},
          {"annual_heating_kwh", s.annual_heating},
          {"annual_cooling_kwh", s.annual_cooling},
          {"annual_lighting_kwh", s.annual_lighting},
          {"annual_final_energy_kwh", s.annual_final_energy},
          {"total_floor_area_m2", s.total_floor_area},
          {"eui_kwh_m2a", s.eui}};
}

namespace {

ElementKind element_kind_from(std::string_view name) {
  for (auto k : {ElementKind::Wall, ElementKind::Window, ElementKind::Roof, ElementKind::Floor,
                 ElementKind::Infiltration}) {
    if (to_string(k) == name) return k;
  }
  throw ExtractionError("unknown element kind '" + std::string(name) + "'");
}

template <typename T>
T required(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ExtractionError(std::string("oracle summary is missing field '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

PointSummary summary_from_json(const nlohmann::json& j) {
  PointSummary s;
  for (const auto& ej : required<nlohmann::json>(j, "elements")) {
    ElementAverage e;
    e.id = required<std::string>(ej, "id");
    e.kind = element_kind_from(required<std::string>(ej, "kind"));
    e.area = required<double>(ej, "area_m2");
    e.mean_flow = required<double>(ej, "mean_flow_w");
    if (ej.contains("orientation")) {
      const auto o = ej["orientation"].get<std::string>();
      for (auto c : kCardinals) {
        if (short_name(c) == o) e.orientation = c;
      }
    }
    e.level = ej.value("level", 0);
    s.elements.push_back(std::move(e));
  }
  s.heating_load = required<double>(j, "heating_load_w");
  s.cooling_load = required<double>(j, "cooling_load_w");
  s.lighting_load = required<double>(j, "lighting_load_w");
  s.occupied_hours = required<double>(j, "occupied_hours");
  s.annual_heating = required<double>(j, "annual_heating_kwh");
  s.annual_cooling = required<double>(j, "annual_cooling_kwh");
  s.annual_lighting = required<double>(j, "annual_lighting_kwh");
  s.annual_final_energy = required<double>(j, "annual_final_energy_kwh");
  s.total_floor_area = required<double>(j, "total_floor_area_m2");
  s.eui = required<double>(j, "eui_kwh_m2a");
  return s;
}

std::string element_series_csv(const ElementSeries& e) {
  std::string out = "hour," + e.id + " [W]\n";
  for (std::size_t t = 0; t < e.flow.size(); ++t) {
    out += std::to_string(t) + "," + format_double(e.flow[t]) + "\n";
  }
  return out;
}

}  // namespace cbml
