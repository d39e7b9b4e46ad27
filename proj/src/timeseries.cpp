#include "cbml/timeseries.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cbml/metrics.hpp"
#include "cbml/util.hpp"

namespace cbml {

namespace chr = std::chrono;

CalendarFields calendar_fields(chr::sys_seconds t) {
  const auto day = chr::floor<chr::days>(t);
  const chr::year_month_day ymd{day};
  const chr::weekday wd{day};
  CalendarFields c;
  c.year = static_cast<int>(ymd.year());
  c.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  c.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
  c.day_of_week = static_cast<int>(wd.iso_encoding()) - 1;
  c.hour = static_cast<int>(chr::duration_cast<chr::hours>(t - day).count());
  c.is_weekday = c.day_of_week < 5;

  // ISO week: the week containing this date's Thursday.
  const auto thursday = day + chr::days(3 - c.day_of_week);
  const chr::year_month_day thu{thursday};
  const chr::sys_days jan1{thu.year() / chr::January / 1};
  c.week = static_cast<int>((thursday - jan1).count() / 7) + 1;

  const chr::sys_days first{ymd.year() / ymd.month() / 1};
  const int first_dow = static_cast<int>(chr::weekday{first}.iso_encoding()) - 1;
  c.week_of_month = (c.day - 1 + first_dow) / 7 + 1;
  return c;
}

std::vector<std::size_t> LagFeatureSpec::offsets() const {
  const std::size_t step = granularity == LagGranularity::Days ? 24 : 1;
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k <= lags; ++k) out.push_back(k * step);
  return out;
}

std::size_t LagFeatureSpec::max_offset() const { return lags * (granularity == LagGranularity::Days ? 24 : 1); }

std::string LagFeatureSpec::advisory() const {
  if (granularity == LagGranularity::Hours && (lags < 12 || lags > 24)) {
    return "hourly lag count " + std::to_string(lags) + " is outside the recommended 12-24";
  }
  if (granularity == LagGranularity::Days && (lags < 3 || lags > 7)) {
    return "daily lag count " + std::to_string(lags) + " is outside the recommended 3-7";
  }
  return {};
}

void LagFeatureSpec::validate() const {
  if (lags == 0) throw ValidationError("lag count must be at least 1");
}

std::vector<Column> timeseries_feature_columns(const LagFeatureSpec& spec, const std::string& unit) {
  std::vector<Column> cols{{"year", "-"},        {"month", "-"}, {"week", "-"},          {"day", "-"},
                           {"day_of_week", "-"}, {"week_of_month", "-"}, {"hour", "h"}, {"is_weekday", "-"}};
  const std::string suffix = spec.granularity == LagGranularity::Days ? "d" : "h";
  for (std::size_t k = 1; k <= spec.lags; ++k) cols.push_back({"lag_" + std::to_string(k) + suffix, unit});
  return cols;
}

Dataset timeseries_featurize(const TimeSeries& series, const LagFeatureSpec& spec) {
  spec.validate();
  const std::size_t max_lag = spec.max_offset();
  if (max_lag >= series.size()) {
    throw ValidationError("lag of " + std::to_string(max_lag) + " steps exceeds series length " +
                          std::to_string(series.size()));
  }
  Dataset d;
  d.input_columns = timeseries_feature_columns(spec, series.unit);
  d.output_columns = {{series.name, series.unit}};
  const auto offsets = spec.offsets();
  const std::size_t rows = series.size() - max_lag;
  d.inputs.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d.input_columns.size()));
  d.outputs.resize(static_cast<Eigen::Index>(rows), 1);
  for (std::size_t t = max_lag; t < series.size(); ++t) {
    const auto r = static_cast<Eigen::Index>(t - max_lag);
    const CalendarFields c = calendar_fields(series.time(t));
    const double cal[] = {double(c.year), double(c.month), double(c.week), double(c.day), double(c.day_of_week),
                          double(c.week_of_month), double(c.hour), c.is_weekday ? 1.0 : 0.0};
    Eigen::Index col = 0;
    for (double v : cal) d.inputs(r, col++) = v;
    for (auto off : offsets) d.inputs(r, col++) = series.values[t - off];
    d.outputs(r, 0) = series.values[t];
    d.tags.push_back(std::to_string(t));
  }
  return d;
}

TimeSeries synthetic_load_series(const SyntheticLoadOptions& o) {
  TimeSeries s;
  s.start = chr::sys_days{chr::year{o.start_year} / chr::January / 1};
  s.values.resize(o.hours);
  Rng rng(o.seed);
  for (std::size_t i = 0; i < o.hours; ++i) {
    const CalendarFields c = calendar_fields(s.time(i));
    const double day_of_year = static_cast<double>(i) / 24.0;
    double v = o.base + o.seasonal * std::cos(2.0 * std::numbers::pi * day_of_year / 365.0);
    // Occupied profile: ramps 7-9, flat to 17, ramps down to 19.
    double occ = 0.0;
    if (c.hour >= 7 && c.hour < 19) {
      occ = c.hour < 9 ? (c.hour - 6) / 3.0 : c.hour >= 17 ? (19 - c.hour) / 3.0 : 1.0;
    }
    v += o.occupied_peak * occ * (c.is_weekday ? 1.0 : o.weekend_fraction);
    v *= 1.0 + o.noise * rng.normal();
    s.values[i] = std::max(v, 0.05 * o.base);
  }
  return s;
}

std::string ForecastResult::to_csv(const TimeSeries& series) const {
  std::ostringstream out;
  out << "index,timestamp,truth [" << series.unit << "],gbdt [" << series.unit << "],persistence [" << series.unit
      << "]\n";
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto t = chr::floor<chr::seconds>(series.time(indices[i]));
    const auto day = chr::floor<chr::days>(t);
    const chr::year_month_day ymd{day};
    char stamp[64];
    std::snprintf(stamp, sizeof stamp, "%04d-%02u-%02uT%02ld:00", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(chr::duration_cast<chr::hours>(t - day).count()));
    out << indices[i] << "," << stamp << "," << format_double(truth[i]) << "," << format_double(predicted[i]) << ","
        << format_double(persistence[i]) << "\n";
  }
  return out.str();
}

nlohmann::json ForecastResult::summary() const {
  return {{"holdout_rows", indices.size()},
          {"mape", mape},
          {"persistence_mape", persistence_mape},
          {"stages", model.trees.size()},
          {"shrinkage", model.shrinkage},
          {"final_train_loss", model.train_loss.empty() ? 0.0 : model.train_loss.back()}};
}

ForecastResult forecast_holdout(const TimeSeries& series, const LagFeatureSpec& spec, const GbdtOptions& options,
                                double holdout_fraction) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ValidationError("holdout fraction must lie in (0, 1)");
  }
  const Dataset d = timeseries_featurize(series, spec);
  const std::size_t rows = d.rows();
  const auto test = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(rows)));
  const std::size_t train = rows - test;
  if (test < 2) throw ValidationError("holdout has fewer than 2 rows");
  const std::size_t first_index = series.size() - rows;
  if (first_index + train < 24) throw ValidationError("series too short for a 24-hour persistence baseline");

  ForecastResult r;
  r.model = fit_gbdt(d.inputs.topRows(static_cast<Eigen::Index>(train)), d.outputs.col(0).head(static_cast<Eigen::Index>(train)),
                     d.input_columns, d.output_columns.front(), options);
  const Eigen::VectorXd pred = r.model.predict(d.inputs.bottomRows(static_cast<Eigen::Index>(test)));
  for (std::size_t i = 0; i < test; ++i) {
    const std::size_t idx = first_index + train + i;
    r.indices.push_back(idx);
    r.truth.push_back(series.values[idx]);
    r.predicted.push_back(pred[static_cast<Eigen::Index>(i)]);
    r.persistence.push_back(series.values[idx - 24]);
  }
  r.mape = compute_metrics(r.predicted, r.truth).mape;
  r.persistence_mape = compute_metrics(r.persistence, r.truth).mape;
  return r;
}

}  // namespace cbml
