#include "cbml/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "cbml/util.hpp"

namespace cbml {

namespace {

constexpr double kWidth = 480.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void pad(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
    return;
  }
  const double m = 0.05 * (hi - lo);
  lo -= m;
  hi += m;
}

void axes(std::ostringstream& out, const Frame& f, const std::string& title, const std::string& xl,
          const std::string& yl) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight << "\" height=\""
      << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    out << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(kHeight - kBottom + 16)
        << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
    out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(f.py(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
        << "</text>\n";
  }
  out << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << num(kHeight - 12)
      << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n";
  out << "<text transform=\"translate(16," << num((kTop + kHeight - kBottom) / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(yl) << "</text>\n";
}

void legend(std::ostringstream& out, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 14 + 14 * static_cast<double>(i);
    out << "<rect x=\"" << num(kLeft + 8) << "\" y=\"" << num(y - 8) << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[i % 5] << "\"/>\n";
    out << "<text x=\"" << num(kLeft + 22) << "\" y=\"" << num(y) << "\">" << escape(names[i]) << "</text>\n";
  }
}

}  // namespace

std::string scatter_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                        const std::vector<ScatterSeries>& series, bool identity_line) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  double ylo = lo, yhi = hi;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw ValidationError("scatter series '" + s.name + "' has unequal lengths");
    for (double v : s.x) lo = std::min(lo, v), hi = std::max(hi, v);
    for (double v : s.y) ylo = std::min(ylo, v), yhi = std::max(yhi, v);
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0, ylo = 0.0, yhi = 1.0;
  if (identity_line) {
    lo = ylo = std::min(lo, ylo);
    hi = yhi = std::max(hi, yhi);
  }
  pad(lo, hi);
  pad(ylo, yhi);
  const Frame f{lo, hi, ylo, yhi};
  std::ostringstream out;
  axes(out, f, title, x_label, y_label);
  if (identity_line) {
    out << "<line x1=\"" << num(f.px(lo)) << "\" y1=\"" << num(f.py(lo)) << "\" x2=\"" << num(f.px(hi)) << "\" y2=\""
        << num(f.py(hi)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  std::vector<std::string> names;
  for (std::size_t k = 0; k < series.size(); ++k) {
    names.push_back(series[k].name);
    out << "<g fill=\"" << kPalette[k % 5] << "\" fill-opacity=\"0.6\">\n";
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      out << "<circle cx=\"" << num(f.px(series[k].x[i])) << "\" cy=\"" << num(f.py(series[k].y[i]))
          << "\" r=\"2\"/>\n";
    }
    out << "</g>\n";
  }
  legend(out, names);
  out << "</svg>\n";
  return out.str();
}

std::string histogram_svg(const std::string& title, const std::string& x_label, const std::vector<double>& edges,
                          const std::vector<HistogramSeries>& series) {
  if (edges.size() < 2) throw ValidationError("histogram needs at least two bin edges");
  double top = 0.0;
  std::vector<std::vector<double>> freq;
  for (const auto& s : series) {
    if (s.counts.size() + 1 != edges.size()) throw ValidationError("histogram series '" + s.name + "' bin mismatch");
    double total = 0.0;
    for (auto c : s.counts) total += static_cast<double>(c);
    std::vector<double> f;
    for (auto c : s.counts) f.push_back(total > 0 ? static_cast<double>(c) / total : 0.0);
    for (double v : f) top = std::max(top, v);
    freq.push_back(std::move(f));
  }
  const Frame f{edges.front(), edges.back(), 0.0, top > 0 ? top * 1.1 : 1.0};
  std::ostringstream out;
  axes(out, f, title, x_label, "relative frequency");
  std::vector<std::string> names;
  for (std::size_t k = 0; k < series.size(); ++k) {
    names.push_back(series[k].name);
    out << "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << kPalette[k % 5] << "\""
        << (k ? " stroke-dasharray=\"6 3\"" : "") << " points=\"";
    out << num(f.px(edges.front())) << "," << num(f.py(0.0));
    for (std::size_t b = 0; b < freq[k].size(); ++b) {
      out << " " << num(f.px(edges[b])) << "," << num(f.py(freq[k][b])) << " " << num(f.px(edges[b + 1])) << ","
          << num(f.py(freq[k][b]));
    }
    out << " " << num(f.px(edges.back())) << "," << num(f.py(0.0)) << "\"/>\n";
  }
  legend(out, names);
  out << "</svg>\n";
  return out.str();
}

}  // namespace cbml
