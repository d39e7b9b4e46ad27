#pragma once

#include <string>
#include <vector>

namespace cbml {

struct ScatterSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Standalone SVG scatter plot. With identity_line a dashed y = x diagonal is
// drawn, as used for predicted-versus-true plots.
std::string scatter_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                        const std::vector<ScatterSeries>& series, bool identity_line = true);

struct HistogramSeries {
  std::string name;
  std::vector<std::size_t> counts;
};

// Step outlines of relative frequencies over shared bin edges.
std::string histogram_svg(const std::string& title, const std::string& x_label, const std::vector<double>& edges,
                          const std::vector<HistogramSeries>& series);

}  // namespace cbml
