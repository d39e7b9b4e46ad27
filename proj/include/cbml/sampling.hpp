#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cbml/geometry.hpp"

namespace cbml {

struct ParameterRange {
  std::string name;
  std::string unit;
  double min = 0.0;
  double max = 1.0;
  bool integer = false;
};

// Ordered list of sampled design variables. Names normally match
// DesignConfig fields; a name that does not (e.g. "ground_floor_area") is
// carried through the sampled values but not applied to the config.
class ParameterSpace {
 public:
  explicit ParameterSpace(std::vector<ParameterRange> ranges);

  // Box-shaped training buildings and the representative case.
  static ParameterSpace standard();
  // Random footprints: ground floor area replaces length/width.
  static ParameterSpace random_shape();

  std::size_t size() const { return ranges_.size(); }
  const std::vector<ParameterRange>& ranges() const { return ranges_; }
  const ParameterRange& operator[](std::size_t i) const { return ranges_[i]; }
  // Throws ValidationError when absent.
  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const;

  // Affine map of a unit-cube point onto the ranges; integer entries are
  // rounded to the nearest integer and clamped into range.
  std::vector<double> map_unit(std::span<const double> unit) const;
  // Writes every config-backed entry of `values` into a copy of `base`.
  DesignConfig apply(std::span<const double> values, const DesignConfig& base = DesignConfig{}) const;

 private:
  std::vector<ParameterRange> ranges_;
};

struct Violation {
  std::string field;
  double value = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::string message;
};

// Empty iff every config-backed range in the space contains its value.
std::vector<Violation> validate_config(const DesignConfig& config, const ParameterSpace& space);

// Unscrambled Sobol sequence (Joe-Kuo direction numbers, Gray-code order).
// The origin is skipped, so the first point of dimension 1 is 0.5.
class SobolSequence {
 public:
  static constexpr std::size_t kMaxDimension = 40;
  static constexpr std::uint64_t kMaxPoints = std::uint64_t{1} << 20;

  explicit SobolSequence(std::size_t dimension);

  std::vector<double> next();
  std::size_t dimension() const { return dimension_; }

 private:
  std::size_t dimension_;
  std::uint64_t index_ = 0;
  std::vector<std::uint32_t> state_;
  std::vector<std::array<std::uint32_t, 32>> directions_;
};

std::vector<std::vector<double>> sobol_unit(std::size_t dimension, std::size_t count);
// One value per stratum per dimension; strata permutations and in-stratum
// offsets come from Rng(seed).
std::vector<std::vector<double>> lhs_unit(std::size_t dimension, std::size_t count, std::uint64_t seed);

std::vector<std::vector<double>> sobol_points(const ParameterSpace& space, std::size_t count);
std::vector<std::vector<double>> lhs_points(const ParameterSpace& space, std::size_t count, std::uint64_t seed);

std::vector<DesignConfig> sobol_samples(const ParameterSpace& space, std::size_t count);
std::vector<DesignConfig> lhs_samples(const ParameterSpace& space, std::size_t count, std::uint64_t seed);

enum class SampleScheme { Sobol, Lhs };

struct SamplePlan {
  SampleScheme scheme = SampleScheme::Sobol;
  std::size_t count = 1;
  std::uint64_t seed = 0;  // lhs only
};

std::vector<std::vector<double>> sample_points(const ParameterSpace& space, const SamplePlan& plan);

// CSV with a "name [unit]" header, one sample per row.
std::string samples_to_csv(const ParameterSpace& space, const std::vector<std::vector<double>>& points);

}  // namespace cbml
