#include "cbml/metrics.hpp"

#include <cmath>
#include <limits>

#include "cbml/util.hpp"

namespace cbml {

nlohmann::json Metrics::to_json() const {
  return {{"mape", mape},
          {"r2", r2},
          {"mean_signed_error", mean_signed_error},
          {"count", count},
          {"mape_excluded", mape_excluded}};
}

Metrics compute_metrics(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.size() != truths.size()) {
    throw ValidationError("metrics: " + std::to_string(predictions.size()) + " predictions vs " +
                          std::to_string(truths.size()) + " truths");
  }
  if (truths.size() < 2) throw ValidationError("metrics need at least 2 pairs");
  Metrics m;
  m.count = truths.size();
  double mean = 0.0;
  for (double t : truths) mean += t;
  mean /= static_cast<double>(truths.size());
  double sse = 0.0, sst = 0.0, ape = 0.0, signed_sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const double e = predictions[i] - truths[i];
    sse += e * e;
    sst += (truths[i] - mean) * (truths[i] - mean);
    signed_sum += e;
    if (truths[i] == 0.0) {
      ++m.mape_excluded;
    } else {
      ape += std::abs(e) / std::abs(truths[i]);
      ++used;
    }
  }
  m.mape = used ? 100.0 * ape / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
  m.mean_signed_error = signed_sum / static_cast<double>(truths.size());
  if (sst > 0.0) {
    m.r2 = 1.0 - sse / sst;
  } else {
    m.r2 = sse == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  }
  return m;
}

}  // namespace cbml
