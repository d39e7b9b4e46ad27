#include "cbml/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cbml/util.hpp"

namespace cbml {

ParameterSpace::ParameterSpace(std::vector<ParameterRange> ranges) : ranges_(std::move(ranges)) {
  std::set<std::string> seen;
  for (const auto& r : ranges_) {
    if (!(r.min < r.max)) throw ValidationError("parameter '" + r.name + "': min must be below max");
    if (!seen.insert(r.name).second) throw ValidationError("duplicate parameter '" + r.name + "'");
  }
}

ParameterSpace ParameterSpace::standard() {
  return ParameterSpace({
      {"length", "m", 12.0, 30.0, false},
      {"width", "m", 12.0, 30.0, false},
      {"floor_height", "m", 3.0, 4.0, false},
      {"orientation", "deg", 0.0, 90.0, false},
      {"num_floors", "-", 2.0, 5.0, true},
      {"u_wall", "W/m2K", 0.15, 0.25, false},
      {"u_ground", "W/m2K", 0.15, 0.25, false},
      {"u_roof", "W/m2K", 0.15, 0.25, false},
      {"u_internal_floor", "W/m2K", 0.4, 0.6, false},
      {"u_window", "W/m2K", 0.7, 1.0, false},
      {"g_value", "-", 0.3, 0.6, false},
      {"slab_heat_capacity", "J/m3K", 800.0, 1000.0, false},
      {"internal_mass_capacity", "kJ/m2K", 60.0, 120.0, false},
      {"permeability", "m3/m2h", 6.0, 9.0, false},
      {"wwr_north", "-", 0.1, 0.5, false},
      {"wwr_east", "-", 0.1, 0.5, false},
      {"wwr_south", "-", 0.1, 0.5, false},
      {"wwr_west", "-", 0.1, 0.5, false},
      {"boiler_efficiency", "-", 0.92, 0.98, false},
      {"cop_heating", "-", 2.5, 4.5, false},
      {"cop_cooling", "-", 2.5, 4.5, false},
      {"operating_hours", "h", 10.0, 12.0, false},
      {"light_gain", "W/m2", 6.0, 10.0, false},
      {"equipment_gain", "W/m2", 10.0, 14.0, false},
      {"occupancy_density", "m2/person", 16.0, 24.0, false},
  });
}

ParameterSpace ParameterSpace::random_shape() {
  std::vector<ParameterRange> ranges;
  ranges.push_back({"ground_floor_area", "m2", 250.0, 800.0, false});
  const ParameterSpace base = standard();
  for (const auto& r : base.ranges()) {
    if (r.name == "length" || r.name == "width") continue;
    ranges.push_back(r);
  }
  return ParameterSpace(std::move(ranges));
}

std::size_t ParameterSpace::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < ranges_.size(); ++i) {
    if (ranges_[i].name == name) return i;
  }
  throw ValidationError("parameter '" + std::string(name) + "' not in space");
}

bool ParameterSpace::contains(std::string_view name) const {
  return std::any_of(ranges_.begin(), ranges_.end(), [&](const auto& r) { return r.name == name; });
}

std::vector<double> ParameterSpace::map_unit(std::span<const double> unit) const {
  if (unit.size() != ranges_.size()) throw ValidationError("unit point dimension mismatch");
  std::vector<double> out(ranges_.size());
  for (std::size_t i = 0; i < ranges_.size(); ++i) {
    const auto& r = ranges_[i];
    double v = r.min + unit[i] * (r.max - r.min);
    if (r.integer) v = std::clamp(std::round(v), r.min, r.max);
    out[i] = v;
  }
  return out;
}

DesignConfig ParameterSpace::apply(std::span<const double> values, const DesignConfig& base) const {
  if (values.size() != ranges_.size()) throw ValidationError("sample dimension mismatch");
  DesignConfig config = base;
  for (std::size_t i = 0; i < ranges_.size(); ++i) {
    if (find_config_field(ranges_[i].name) != nullptr) set_field(config, ranges_[i].name, values[i]);
  }
  return config;
}

std::vector<Violation> validate_config(const DesignConfig& config, const ParameterSpace& space) {
  std::vector<Violation> out;
  for (const auto& r : space.ranges()) {
    if (find_config_field(r.name) == nullptr) continue;
    const double v = get_field(config, r.name);
    if (!(v >= r.min && v <= r.max)) {
      out.push_back({r.name, v, r.min, r.max,
                     r.name + " = " + format_double(v) + " outside [" + format_double(r.min) + ", " +
                         format_double(r.max) + "] " + r.unit});
    }
  }
  return out;
}

namespace {

struct DirectionEntry {
  int degree;
  std::uint32_t coefficients;  // interior polynomial coefficients
  std::vector<std::uint32_t> initial;
};

// Dimensions 2..40 of the Joe-Kuo (new-joe-kuo-6.21201) table. Dimension 1
// is the van der Corput sequence in base 2.
const std::vector<DirectionEntry>& direction_table() {
  static const std::vector<DirectionEntry> table{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
    {7, 7, {1, 1, 3, 13, 7, 35, 63}},
    {7, 8, {1, 3, 5, 9, 1, 25, 53}},
    {7, 14, {1, 3, 1, 13, 9, 35, 107}},
    {7, 19, {1, 3, 1, 5, 27, 61, 31}},
    {7, 21, {1, 1, 5, 11, 19, 41, 61}},
    {7, 28, {1, 3, 5, 3, 3, 13, 69}},
    {7, 31, {1, 1, 7, 13, 1, 19, 1}},
    {7, 32, {1, 3, 7, 5, 13, 19, 59}},
    {7, 37, {1, 1, 3, 9, 25, 29, 41}},
    {7, 41, {1, 3, 5, 13, 23, 1, 55}},
    {7, 42, {1, 3, 7, 3, 13, 59, 17}},
    {7, 50, {1, 3, 1, 3, 5, 53, 69}},
    {7, 55, {1, 1, 5, 5, 23, 33, 13}},
    {7, 56, {1, 1, 7, 7, 1, 61, 123}},
    {7, 59, {1, 1, 7, 9, 13, 61, 49}},
    {7, 62, {1, 3, 3, 5, 3, 55, 33}},
    {8, 14, {1, 3, 1, 15, 31, 13, 49, 245}},
    {8, 21, {1, 3, 5, 15, 31, 59, 63, 97}},
    {8, 22, {1, 3, 1, 11, 11, 11, 77, 249}},
  };
  return table;
}

}  // namespace

SobolSequence::SobolSequence(std::size_t dimension) : dimension_(dimension), state_(dimension, 0) {
  if (dimension == 0) throw ValidationError("Sobol dimension must be positive");
  if (dimension > kMaxDimension) {
    throw CapabilityError("Sobol dimension " + std::to_string(dimension) + " exceeds the " +
                          std::to_string(kMaxDimension) + " dimensions with shipped direction numbers");
  }
  directions_.resize(dimension);
  for (std::size_t k = 0; k < 32; ++k) directions_[0][k] = std::uint32_t{1} << (31 - k);
  for (std::size_t d = 1; d < dimension; ++d) {
    const auto& e = direction_table()[d - 1];
    const auto s = static_cast<std::size_t>(e.degree);
    std::array<std::uint32_t, 32> m{};
    for (std::size_t k = 0; k < s; ++k) m[k] = e.initial[k];
    for (std::size_t k = s; k < 32; ++k) {
      std::uint32_t value = m[k - s] ^ (m[k - s] << s);
      for (std::size_t j = 1; j < s; ++j) {
        const std::uint32_t bit = (e.coefficients >> (s - 1 - j)) & 1u;
        if (bit) value ^= m[k - j] << j;
      }
      m[k] = value;
    }
    for (std::size_t k = 0; k < 32; ++k) directions_[d][k] = m[k] << (31 - k);
  }
}

std::vector<double> SobolSequence::next() {
  if (index_ + 1 >= (std::uint64_t{1} << 32)) throw CapabilityError("Sobol sequence exhausted");
  // Gray-code update: flip the direction of the lowest zero bit of index_.
  std::size_t c = 0;
  for (std::uint64_t i = index_; i & 1u; i >>= 1) ++c;
  ++index_;
  std::vector<double> point(dimension_);
  for (std::size_t d = 0; d < dimension_; ++d) {
    state_[d] ^= directions_[d][c];
    point[d] = static_cast<double>(state_[d]) * 0x1.0p-32;
  }
  return point;
}

std::vector<std::vector<double>> sobol_unit(std::size_t dimension, std::size_t count) {
  if (count > SobolSequence::kMaxPoints) {
    throw ValidationError("Sobol count " + std::to_string(count) + " exceeds 2^20");
  }
  SobolSequence seq(dimension);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(seq.next());
  return out;
}

std::vector<std::vector<double>> lhs_unit(std::size_t dimension, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ValidationError("LHS count must be positive");
  Rng rng(seed);
  std::vector<std::vector<double>> out(count, std::vector<double>(dimension));
  const double n = static_cast<double>(count);
  for (std::size_t d = 0; d < dimension; ++d) {
    const auto perm = rng.permutation(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double v = (static_cast<double>(perm[i]) + rng.uniform()) / n;
      // Guard against rounding up to the next stratum boundary.
      const double upper = std::nextafter((static_cast<double>(perm[i]) + 1.0) / n, 0.0);
      out[i][d] = std::min(v, upper);
    }
  }
  return out;
}

std::vector<std::vector<double>> sobol_points(const ParameterSpace& space, std::size_t count) {
  auto unit = sobol_unit(space.size(), count);
  for (auto& p : unit) p = space.map_unit(p);
  return unit;
}

std::vector<std::vector<double>> lhs_points(const ParameterSpace& space, std::size_t count, std::uint64_t seed) {
  auto unit = lhs_unit(space.size(), count, seed);
  for (auto& p : unit) p = space.map_unit(p);
  return unit;
}

std::vector<DesignConfig> sobol_samples(const ParameterSpace& space, std::size_t count) {
  std::vector<DesignConfig> out;
  for (const auto& p : sobol_points(space, count)) out.push_back(space.apply(p));
  return out;
}

std::vector<DesignConfig> lhs_samples(const ParameterSpace& space, std::size_t count, std::uint64_t seed) {
  std::vector<DesignConfig> out;
  for (const auto& p : lhs_points(space, count, seed)) out.push_back(space.apply(p));
  return out;
}

std::vector<std::vector<double>> sample_points(const ParameterSpace& space, const SamplePlan& plan) {
  if (plan.count == 0) throw ValidationError("sample count must be positive");
  return plan.scheme == SampleScheme::Sobol ? sobol_points(space, plan.count)
                                            : lhs_points(space, plan.count, plan.seed);
}

std::string samples_to_csv(const ParameterSpace& space, const std::vector<std::vector<double>>& points) {
  std::string out;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (i) out += ',';
    out += space[i].name + " [" + space[i].unit + "]";
  }
  out += '\n';
  for (const auto& p : points) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i) out += ',';
      out += format_double(p[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace cbml
