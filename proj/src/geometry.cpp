#include "cbml/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cbml/util.hpp"

namespace cbml {

std::string_view to_string(Cardinal c) {
  switch (c) {
    case Cardinal::North: return "North";
    case Cardinal::East: return "East";
    case Cardinal::South: return "South";
    case Cardinal::West: return "West";
  }
  return "?";
}

std::string_view short_name(Cardinal c) {
  switch (c) {
    case Cardinal::North: return "N";
    case Cardinal::East: return "E";
    case Cardinal::South: return "S";
    case Cardinal::West: return "W";
  }
  return "?";
}

double azimuth_deg(Cardinal c) { return 90.0 * static_cast<int>(c); }

Cardinal nearest_cardinal(double azimuth) {
  double a = std::fmod(azimuth, 360.0);
  if (a < 0.0) a += 360.0;
  const std::array<double, 4> dist{std::min(a, 360.0 - a), std::abs(a - 90.0), std::abs(a - 180.0),
                                   std::abs(a - 270.0)};
  std::size_t best = 0;
  for (std::size_t i = 1; i < dist.size(); ++i) {
    if (dist[i] < dist[best]) best = i;
  }
  return kCardinals[best];
}

double DesignConfig::wwr(Cardinal c) const {
  switch (c) {
    case Cardinal::North: return wwr_north;
    case Cardinal::East: return wwr_east;
    case Cardinal::South: return wwr_south;
    case Cardinal::West: return wwr_west;
  }
  return 0.0;
}

namespace {

struct FieldAccess {
  ConfigField info;
  double DesignConfig::*member;  // null for num_floors
};

const std::vector<FieldAccess>& field_table() {
  static const std::vector<FieldAccess> table{
      {{"length", "m", false}, &DesignConfig::length},
      {{"width", "m", false}, &DesignConfig::width},
      {{"floor_height", "m", false}, &DesignConfig::floor_height},
      {{"orientation", "deg", false}, &DesignConfig::orientation},
      {{"num_floors", "-", true}, nullptr},
      {{"u_wall", "W/m2K", false}, &DesignConfig::u_wall},
      {{"u_ground", "W/m2K", false}, &DesignConfig::u_ground},
      {{"u_roof", "W/m2K", false}, &DesignConfig::u_roof},
      {{"u_internal_floor", "W/m2K", false}, &DesignConfig::u_internal_floor},
      {{"u_window", "W/m2K", false}, &DesignConfig::u_window},
      {{"g_value", "-", false}, &DesignConfig::g_value},
      {{"slab_heat_capacity", "J/m3K", false}, &DesignConfig::slab_heat_capacity},
      {{"internal_mass_capacity", "kJ/m2K", false}, &DesignConfig::internal_mass_capacity},
      {{"permeability", "m3/m2h", false}, &DesignConfig::permeability},
      {{"wwr_north", "-", false}, &DesignConfig::wwr_north},
      {{"wwr_east", "-", false}, &DesignConfig::wwr_east},
      {{"wwr_south", "-", false}, &DesignConfig::wwr_south},
      {{"wwr_west", "-", false}, &DesignConfig::wwr_west},
      {{"boiler_efficiency", "-", false}, &DesignConfig::boiler_efficiency},
      {{"cop_heating", "-", false}, &DesignConfig::cop_heating},
      {{"cop_cooling", "-", false}, &DesignConfig::cop_cooling},
      {{"operating_hours", "h", false}, &DesignConfig::operating_hours},
      {{"light_gain", "W/m2", false}, &DesignConfig::light_gain},
      {{"equipment_gain", "W/m2", false}, &DesignConfig::equipment_gain},
      {{"occupancy_density", "m2/person", false}, &DesignConfig::occupancy_density},
      {{"heating_setpoint", "degC", false}, &DesignConfig::heating_setpoint},
      {{"cooling_setpoint", "degC", false}, &DesignConfig::cooling_setpoint},
  };
  return table;
}

const FieldAccess& field_access(std::string_view name) {
  for (const auto& f : field_table()) {
    if (f.info.name == name) return f;
  }
  throw ValidationError("unknown design field '" + std::string(name) + "'");
}

}  // namespace

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = [] {
    std::vector<ConfigField> out;
    for (const auto& f : field_table()) out.push_back(f.info);
    return out;
  }();
  return fields;
}

const ConfigField* find_config_field(std::string_view name) {
  for (const auto& f : field_table()) {
    if (f.info.name == name) return &f.info;
  }
  return nullptr;
}

double get_field(const DesignConfig& config, std::string_view name) {
  const auto& f = field_access(name);
  if (f.member == nullptr) return static_cast<double>(config.num_floors);
  return config.*(f.member);
}

void set_field(DesignConfig& config, std::string_view name, double value) {
  const auto& f = field_access(name);
  if (f.member == nullptr) {
    config.num_floors = static_cast<int>(std::lround(value));
    return;
  }
  config.*(f.member) = value;
}

void check_config(const DesignConfig& config) {
  for (const auto& f : config_fields()) {
    if (!std::isfinite(get_field(config, f.name))) {
      throw ValidationError("field '" + std::string(f.name) + "' is not finite");
    }
  }
  if (config.num_floors < 1) throw ValidationError("num_floors must be >= 1");
  if (!(config.heating_setpoint < config.cooling_setpoint)) {
    throw ValidationError("heating_setpoint must be below cooling_setpoint");
  }
}

nlohmann::json config_to_json(const DesignConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : config_fields()) {
    if (f.integer) {
      j[std::string(f.name)] = config.num_floors;
    } else {
      j[std::string(f.name)] = get_field(config, f.name);
    }
  }
  return j;
}

DesignConfig config_from_json(const nlohmann::json& j, bool allow_defaults) {
  if (!j.is_object()) throw ValidationError("design config must be a JSON object");
  DesignConfig config;
  for (const auto& f : config_fields()) {
    const std::string key(f.name);
    const bool optional = allow_defaults || key == "heating_setpoint" || key == "cooling_setpoint";
    auto it = j.find(key);
    if (it == j.end()) {
      if (!optional) throw ValidationError("missing field '" + key + "'");
      continue;
    }
    if (!it->is_number()) throw ValidationError("field '" + key + "' must be a number");
    const double v = it->get<double>();
    if (f.integer && v != std::floor(v)) throw ValidationError("field '" + key + "' must be an integer");
    set_field(config, key, v);
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (find_config_field(it.key()) == nullptr) {
      throw ValidationError("unknown field '" + it.key() + "'");
    }
  }
  return config;
}

double polygon_area(const std::vector<Point2>& v) {
  double twice = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % v.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

Footprint Footprint::box(double length, double width, int floors) {
  return extruded({{0.0, 0.0}, {length, 0.0}, {length, width}, {0.0, width}}, floors);
}

Footprint Footprint::extruded(const std::vector<Point2>& outline, int floors) {
  Footprint fp;
  for (int k = 0; k < floors; ++k) fp.plates.push_back({k, outline});
  return fp;
}

nlohmann::json footprint_to_json(const Footprint& fp) {
  nlohmann::json plates = nlohmann::json::array();
  for (const auto& p : fp.plates) {
    nlohmann::json verts = nlohmann::json::array();
    for (const auto& v : p.vertices) verts.push_back({v.x, v.y});
    plates.push_back({{"level", p.level}, {"vertices", verts}});
  }
  return {{"plates", plates}};
}

Footprint footprint_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("plates") || !j["plates"].is_array()) {
    throw ValidationError("footprint: expected object with 'plates' array");
  }
  Footprint fp;
  for (const auto& pj : j["plates"]) {
    if (!pj.contains("level") || !pj.contains("vertices")) {
      throw ValidationError("footprint: plate needs 'level' and 'vertices'");
    }
    Plate plate;
    plate.level = pj["level"].get<int>();
    for (const auto& vj : pj["vertices"]) {
      if (!vj.is_array() || vj.size() != 2) throw ValidationError("footprint: vertex must be [x, y]");
      plate.vertices.push_back({vj[0].get<double>(), vj[1].get<double>()});
    }
    fp.plates.push_back(std::move(plate));
  }
  return fp;
}

Footprint BuildingShape::footprint_for(const DesignConfig& config) const {
  switch (kind) {
    case Kind::Box:
      return Footprint::box(config.length, config.width, config.num_floors);
    case Kind::Setback: {
      Footprint fp = Footprint::box(config.length, config.width, config.num_floors);
      if (config.num_floors >= 2) {
        const double w = config.width * setback_fraction;
        fp.plates.back().vertices = {{0.0, 0.0}, {config.length, 0.0}, {config.length, w}, {0.0, w}};
      }
      return fp;
    }
    case Kind::Custom:
      return custom;
  }
  return custom;
}

nlohmann::json shape_to_json(const BuildingShape& shape) {
  switch (shape.kind) {
    case BuildingShape::Kind::Box: return {{"kind", "box"}};
    case BuildingShape::Kind::Setback: return {{"kind", "setback"}, {"setback_fraction", shape.setback_fraction}};
    case BuildingShape::Kind::Custom: return {{"kind", "custom"}, {"footprint", footprint_to_json(shape.custom)}};
  }
  return {};
}

BuildingShape shape_from_json(const nlohmann::json& j) {
  const std::string kind = j.value("kind", std::string("box"));
  if (kind == "box") return BuildingShape::box();
  if (kind == "setback") return BuildingShape::setback(j.value("setback_fraction", 0.5));
  if (kind == "custom") {
    if (!j.contains("footprint")) throw ValidationError("custom shape requires 'footprint'");
    return BuildingShape::from_footprint(footprint_from_json(j["footprint"]));
  }
  throw ValidationError("unknown shape kind '" + kind + "'");
}

double GeometrySummary::total_window_area() const {
  return std::accumulate(window_area.begin(), window_area.end(), 0.0);
}

double GeometrySummary::total_roof_area() const {
  double a = 0.0;
  for (const auto& r : roof_segments) a += r.area;
  return a;
}

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Point2& p, const Point2& a, const Point2& b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_touch(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double d1 = cross(c, d, a);
  const double d2 = cross(c, d, b);
  const double d3 = cross(a, b, c);
  const double d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && on_segment(a, c, d)) return true;
  if (d2 == 0 && on_segment(b, c, d)) return true;
  if (d3 == 0 && on_segment(c, a, b)) return true;
  if (d4 == 0 && on_segment(d, a, b)) return true;
  return false;
}

void check_plate(const Plate& plate) {
  const auto& v = plate.vertices;
  const std::string where = "plate at level " + std::to_string(plate.level);
  if (v.size() < 4) throw ValidationError(where + ": polygon needs at least 4 vertices");
  for (const auto& p : v) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ValidationError(where + ": non-finite vertex");
  }
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % n];
    const bool horizontal = a.y == b.y && a.x != b.x;
    const bool vertical = a.x == b.x && a.y != b.y;
    if (!horizontal && !vertical) {
      throw ValidationError(where + ": edge " + std::to_string(i) + " is not axis-aligned or has zero length");
    }
  }
  // Non-adjacent edges must not touch.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_touch(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) {
        throw ValidationError(where + ": polygon is not simple");
      }
    }
  }
  const double area = polygon_area(v);
  if (area == 0.0) throw ValidationError(where + ": degenerate polygon (zero area)");
  if (area < 0.0) throw ValidationError(where + ": polygon must be counter-clockwise");
}

}  // namespace

GeometrySummary derive_geometry(const DesignConfig& config, const Footprint& footprint) {
  if (config.num_floors < 1) throw ValidationError("num_floors must be >= 1");
  if (!(config.floor_height > 0.0)) throw ValidationError("floor_height must be positive");
  if (static_cast<int>(footprint.plates.size()) != config.num_floors) {
    throw StructuralError("footprint has " + std::to_string(footprint.plates.size()) + " plates but num_floors is " +
                          std::to_string(config.num_floors));
  }
  std::vector<const Plate*> by_level(static_cast<std::size_t>(config.num_floors), nullptr);
  for (const auto& p : footprint.plates) {
    if (p.level < 0 || p.level >= config.num_floors) {
      throw StructuralError("plate level " + std::to_string(p.level) + " outside 0.." +
                            std::to_string(config.num_floors - 1));
    }
    if (by_level[static_cast<std::size_t>(p.level)] != nullptr) {
      throw StructuralError("duplicate plate for level " + std::to_string(p.level));
    }
    by_level[static_cast<std::size_t>(p.level)] = &p;
  }
  for (const auto* p : by_level) check_plate(*p);

  GeometrySummary g;
  const double h = config.floor_height;
  std::vector<double> plate_area;
  for (const auto* p : by_level) {
    const auto& v = p->vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& a = v[i];
      const auto& b = v[(i + 1) % v.size()];
      const double dx = b.x - a.x;
      const double dy = b.y - a.y;
      // Outward normal of a counter-clockwise polygon is (dy, -dx).
      const double normal_azimuth = std::atan2(dy, -dx) * 180.0 / M_PI;
      const Cardinal c = nearest_cardinal(normal_azimuth + config.orientation);
      g.gross_wall_area[static_cast<std::size_t>(c)] += std::hypot(dx, dy) * h;
    }
    plate_area.push_back(polygon_area(v));
  }
  for (auto c : kCardinals) {
    const auto i = static_cast<std::size_t>(c);
    g.window_area[i] = g.gross_wall_area[i] * config.wwr(c);
    g.wall_area[i] = g.gross_wall_area[i] - g.window_area[i];
  }

  const double tol = 1e-9 * plate_area.front();
  for (std::size_t k = 0; k < plate_area.size(); ++k) {
    const double above = k + 1 < plate_area.size() ? plate_area[k + 1] : 0.0;
    if (above > plate_area[k] + tol) {
      throw StructuralError("plate at level " + std::to_string(k + 1) + " is larger than the plate below it");
    }
    const double exposed = plate_area[k] - above;
    if (exposed > tol) g.roof_segments.push_back({static_cast<int>(k) + 1, exposed});
  }

  g.ground_area = plate_area.front();
  g.total_floor_area = std::accumulate(plate_area.begin(), plate_area.end(), 0.0);
  g.internal_floor_area = g.total_floor_area - g.ground_area;
  g.volume = g.total_floor_area * h;
  g.building_height = h * config.num_floors;
  double gross = 0.0;
  for (double a : g.gross_wall_area) gross += a;
  g.envelope_area = gross + g.total_roof_area() + g.ground_area;
  g.compactness = g.envelope_area / g.volume;
  return g;
}

nlohmann::json geometry_to_json(const GeometrySummary& g) {
  nlohmann::json walls, windows, gross;
  for (auto c : kCardinals) {
    const auto i = static_cast<std::size_t>(c);
    walls[std::string(short_name(c))] = g.wall_area[i];
    windows[std::string(short_name(c))] = g.window_area[i];
    gross[std::string(short_name(c))] = g.gross_wall_area[i];
  }
  nlohmann::json roofs = nlohmann::json::array();
  for (const auto& r : g.roof_segments) roofs.push_back({{"level", r.level}, {"area", r.area}});
  return {{"gross_wall_area", gross},
          {"wall_area", walls},
          {"window_area", windows},
          {"roof_segments", roofs},
          {"ground_area", g.ground_area},
          {"internal_floor_area", g.internal_floor_area},
          {"total_floor_area", g.total_floor_area},
          {"volume", g.volume},
          {"envelope_area", g.envelope_area},
          {"compactness", g.compactness},
          {"building_height", g.building_height}};
}

}  // namespace cbml
