#include <gtest/gtest.h>

#include "cbml/metrics.hpp"
#include "cbml/timeseries.hpp"
#include "cbml/util.hpp"

using namespace cbml;
namespace chr = std::chrono;

namespace {

TimeSeries series_of(std::vector<double> values) {
  TimeSeries s;
  s.start = chr::sys_days{chr::year{2023} / chr::January / 2};
  s.values = std::move(values);
  return s;
}

}  // namespace

TEST(LagFeatures, TwoLagsOnFourValues) {
  const auto d = timeseries_featurize(series_of({1, 2, 3, 4}), {2, LagGranularity::Hours});
  ASSERT_EQ(d.rows(), 2u);
  const auto lag1 = d.input_columns.size() - 2;
  EXPECT_EQ(d.input_columns[lag1].name, "lag_1h");
  EXPECT_EQ(d.inputs(0, static_cast<Eigen::Index>(lag1)), 2.0);
  EXPECT_EQ(d.inputs(0, static_cast<Eigen::Index>(lag1 + 1)), 1.0);
  EXPECT_EQ(d.inputs(1, static_cast<Eigen::Index>(lag1)), 3.0);
  EXPECT_EQ(d.inputs(1, static_cast<Eigen::Index>(lag1 + 1)), 2.0);
  EXPECT_EQ(d.outputs(0, 0), 3.0);
  EXPECT_EQ(d.outputs(1, 0), 4.0);
  EXPECT_EQ(d.tags[0], "2");
}

TEST(LagFeatures, DailyLagsStepByADay) {
  LagFeatureSpec spec{3, LagGranularity::Days};
  EXPECT_EQ(spec.offsets(), (std::vector<std::size_t>{24, 48, 72}));
  std::vector<double> v(100);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = double(i);
  const auto d = timeseries_featurize(series_of(v), spec);
  ASSERT_EQ(d.rows(), 28u);
  const auto first_lag = static_cast<Eigen::Index>(d.input_columns.size() - 3);
  EXPECT_EQ(d.inputs(0, first_lag), 72.0 - 24.0);
  EXPECT_EQ(d.inputs(0, first_lag + 2), 0.0);
}

TEST(LagFeatures, YearOfHoursWithDayOfLags) {
  SyntheticLoadOptions o;
  const auto s = synthetic_load_series(o);
  ASSERT_EQ(s.size(), 8760u);
  for (double v : s.values) EXPECT_GT(v, 0.0);
  const auto d = timeseries_featurize(s, {24, LagGranularity::Hours});
  EXPECT_EQ(d.rows(), 8736u);
  EXPECT_EQ(d.input_columns.size(), 8u + 24u);
}

TEST(LagFeatures, LagAsLongAsTheSeriesIsRejected) {
  EXPECT_THROW(timeseries_featurize(series_of({1, 2, 3}), {3, LagGranularity::Hours}), ValidationError);
  EXPECT_THROW(timeseries_featurize(series_of({1, 2, 3}), {0, LagGranularity::Hours}), ValidationError);
  EXPECT_THROW(timeseries_featurize(series_of(std::vector<double>(48, 1.0)), {2, LagGranularity::Days}),
               ValidationError);
}

TEST(LagFeatures, AdvisoryOutsideRecommendedBands) {
  EXPECT_TRUE((LagFeatureSpec{12, LagGranularity::Hours}).advisory().empty());
  EXPECT_TRUE((LagFeatureSpec{24, LagGranularity::Hours}).advisory().empty());
  EXPECT_TRUE((LagFeatureSpec{5, LagGranularity::Days}).advisory().empty());
  EXPECT_NE((LagFeatureSpec{48, LagGranularity::Hours}).advisory().find("12-24"), std::string::npos);
  EXPECT_NE((LagFeatureSpec{2, LagGranularity::Days}).advisory().find("3-7"), std::string::npos);
}

TEST(Calendar, SaturdayIsNotAWeekday) {
  const chr::sys_seconds sat{chr::sys_days{chr::year{2023} / chr::January / 7} + chr::hours(13)};
  const auto c = calendar_fields(sat);
  EXPECT_EQ(c.day_of_week, 5);
  EXPECT_FALSE(c.is_weekday);
  EXPECT_EQ(c.hour, 13);
  EXPECT_EQ(c.month, 1);
  EXPECT_EQ(c.day, 7);
  // 2023-01-01 is a Sunday in ISO week 52 of 2022; 2023-01-02 starts week 1.
  EXPECT_EQ(calendar_fields(chr::sys_days{chr::year{2023} / chr::January / 1}).week, 52);
  EXPECT_EQ(calendar_fields(chr::sys_days{chr::year{2023} / chr::January / 2}).week, 1);
  EXPECT_TRUE(calendar_fields(chr::sys_days{chr::year{2023} / chr::January / 2}).is_weekday);
  EXPECT_EQ(calendar_fields(chr::sys_days{chr::year{2023} / chr::January / 2}).week_of_month, 2);
}

TEST(Forecast, GradientBoostingBeatsPersistence) {
  const auto s = synthetic_load_series({});
  GbdtOptions o;
  o.stages = 150;
  const auto r = forecast_holdout(s, {24, LagGranularity::Hours}, o);
  EXPECT_EQ(r.indices.size(), r.truth.size());
  EXPECT_EQ(r.truth.size(), r.predicted.size());
  EXPECT_LT(r.mape, r.persistence_mape);
  // Independent recomputation of both scores.
  EXPECT_NEAR(compute_metrics(r.predicted, r.truth).mape, r.mape, 1e-9);
  EXPECT_NEAR(compute_metrics(r.persistence, r.truth).mape, r.persistence_mape, 1e-9);
  for (std::size_t i = 0; i < r.indices.size(); ++i) {
    ASSERT_EQ(r.truth[i], s.values[r.indices[i]]);
    ASSERT_EQ(r.persistence[i], s.values[r.indices[i] - 24]);
  }
  EXPECT_NE(r.to_csv(s).find("persistence"), std::string::npos);
}

TEST(Forecast, BadHoldoutRejected) {
  const auto s = synthetic_load_series({});
  EXPECT_THROW(forecast_holdout(s, {24, LagGranularity::Hours}, {}, 0.0), ValidationError);
  EXPECT_THROW(forecast_holdout(s, {24, LagGranularity::Hours}, {}, 1.0), ValidationError);
}
