#pragma once

#include <span>

#include <json.hpp>

namespace cbml {

struct Metrics {
  double mape = 0.0;         // percent, over pairs with non-zero truth
  double r2 = 0.0;
  double mean_signed_error = 0.0;  // mean(prediction - truth)
  std::size_t count = 0;
  std::size_t mape_excluded = 0;   // pairs with zero truth

  nlohmann::json to_json() const;
};

// MAPE = mean(|p - t| / |t|) * 100, R2 = 1 - SSE / SST. Requires equal
// lengths of at least 2. A constant truth vector gives R2 = 1 for a perfect
// fit and -inf otherwise.
Metrics compute_metrics(std::span<const double> predictions, std::span<const double> truths);

}  // namespace cbml
