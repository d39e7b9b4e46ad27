#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbml/dataset.hpp"
#include "cbml/trees.hpp"

namespace cbml {

// Hourly series starting at a UTC timestamp.
struct TimeSeries {
  std::chrono::sys_seconds start;
  std::vector<double> values;
  std::string name = "load";
  std::string unit = "W";

  std::size_t size() const { return values.size(); }
  std::chrono::sys_seconds time(std::size_t i) const { return start + std::chrono::hours(i); }
};

enum class LagGranularity { Hours, Days };

struct CalendarFields {
  int year = 0;
  int month = 0;         // 1..12
  int week = 0;          // ISO week 1..53
  int day = 0;           // day of month
  int day_of_week = 0;   // Monday = 0
  int week_of_month = 0; // 1..6, weeks starting Monday
  int hour = 0;
  bool is_weekday = false;
};

CalendarFields calendar_fields(std::chrono::sys_seconds t);

struct LagFeatureSpec {
  std::size_t lags = 24;
  LagGranularity granularity = LagGranularity::Hours;

  // Offsets in series steps for lag 1..n.
  std::vector<std::size_t> offsets() const;
  std::size_t max_offset() const;
  // Empty when the lag count lies in the recommended band (12-24 hours or
  // 3-7 days), otherwise an advisory message.
  std::string advisory() const;
  void validate() const;
};

std::vector<Column> timeseries_feature_columns(const LagFeatureSpec& spec, const std::string& unit);

// One row per timestamp with a complete lag history: the calendar fields
// followed by lag 1..n. Tags carry the row's series index.
Dataset timeseries_featurize(const TimeSeries& series, const LagFeatureSpec& spec);

struct SyntheticLoadOptions {
  std::size_t hours = 8760;
  std::uint64_t seed = 11;
  int start_year = 2023;
  double base = 40e3;          // W
  double occupied_peak = 60e3; // W added during weekday working hours
  double weekend_fraction = 0.25;
  double seasonal = 20e3;      // W amplitude, peaking in winter
  double noise = 0.03;         // relative
};

// Positive hourly load with daily, weekly and annual periodicity.
TimeSeries synthetic_load_series(const SyntheticLoadOptions& options);

struct ForecastResult {
  std::vector<std::size_t> indices;  // series index of each held-out row
  std::vector<double> truth;
  std::vector<double> predicted;
  std::vector<double> persistence;   // value 24 hours earlier
  double mape = 0.0;
  double persistence_mape = 0.0;
  GbdtModel model;

  std::string to_csv(const TimeSeries& series) const;
  nlohmann::json summary() const;
};

// Fits on the leading part of the featurized series and forecasts the
// trailing holdout fraction one step ahead.
ForecastResult forecast_holdout(const TimeSeries& series, const LagFeatureSpec& spec, const GbdtOptions& options,
                                double holdout_fraction = 0.2);

}  // namespace cbml
