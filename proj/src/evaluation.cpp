#include "cbml/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace cbml {

using nlohmann::json;

namespace {

std::string sample_id(const std::string& prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04zu", prefix.c_str(), i);
  return buf;
}

}  // namespace

std::vector<DesignSample> training_designs(std::size_t count) {
  const auto space = ParameterSpace::standard();
  std::vector<DesignSample> out;
  std::size_t i = 0;
  for (const auto& c : sobol_samples(space, count)) {
    out.push_back({sample_id("train-", i++), c, Footprint::box(c.length, c.width, c.num_floors)});
  }
  return out;
}

std::vector<Point2> random_rectilinear_outline(Rng& rng, double area) {
  constexpr int kGrid = 8;
  if (!(area > 0.0)) throw ValidationError("outline area must be positive");
  for (;;) {
    std::vector<std::vector<bool>> cell(kGrid, std::vector<bool>(kGrid, false));
    const std::size_t rects = 2 + rng.index(2);
    bool overlapping = true;
    for (std::size_t r = 0; r < rects; ++r) {
      const int w = 2 + static_cast<int>(rng.index(kGrid - 3));
      const int h = 2 + static_cast<int>(rng.index(kGrid - 3));
      const int x0 = static_cast<int>(rng.index(static_cast<std::size_t>(kGrid - w + 1)));
      const int y0 = static_cast<int>(rng.index(static_cast<std::size_t>(kGrid - h + 1)));
      bool touches = r == 0;
      for (int x = x0; x < x0 + w; ++x) {
        for (int y = y0; y < y0 + h; ++y) touches = touches || cell[x][y];
      }
      overlapping = overlapping && touches;
      for (int x = x0; x < x0 + w; ++x) {
        for (int y = y0; y < y0 + h; ++y) cell[x][y] = true;
      }
    }
    if (!overlapping) continue;
    auto filled = [&](int x, int y) { return x >= 0 && y >= 0 && x < kGrid && y < kGrid && cell[x][y]; };

    // Diagonal-only contact pinches the outline into a non-simple polygon.
    bool pinched = false;
    for (int x = -1; x < kGrid; ++x) {
      for (int y = -1; y < kGrid; ++y) {
        const bool a = filled(x, y), b = filled(x + 1, y), c = filled(x, y + 1), d = filled(x + 1, y + 1);
        if ((a && d && !b && !c) || (b && c && !a && !d)) pinched = true;
      }
    }
    if (pinched) continue;

    // Directed boundary edges with the interior on the left.
    std::map<std::pair<int, int>, std::pair<int, int>> next;
    std::size_t cells = 0;
    for (int x = 0; x < kGrid; ++x) {
      for (int y = 0; y < kGrid; ++y) {
        if (!cell[x][y]) continue;
        ++cells;
        if (!filled(x, y - 1)) next[{x, y}] = {x + 1, y};
        if (!filled(x + 1, y)) next[{x + 1, y}] = {x + 1, y + 1};
        if (!filled(x, y + 1)) next[{x + 1, y + 1}] = {x, y + 1};
        if (!filled(x - 1, y)) next[{x, y + 1}] = {x, y};
      }
    }
    std::vector<std::pair<int, int>> loop;
    auto at = next.begin()->first;
    do {
      loop.push_back(at);
      at = next.at(at);
    } while (at != loop.front() && loop.size() <= next.size());
    // A second loop means a hole.
    if (loop.size() != next.size()) continue;

    std::vector<std::pair<int, int>> corners;
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = loop[(i + n - 1) % n];
      const auto& q = loop[i];
      const auto& r = loop[(i + 1) % n];
      const bool straight = (p.first == q.first && q.first == r.first) || (p.second == q.second && q.second == r.second);
      if (!straight) corners.push_back(q);
    }
    if (corners.size() <= 4) continue;

    const double s = std::sqrt(area / static_cast<double>(cells));
    std::vector<Point2> out;
    for (const auto& [x, y] : corners) out.push_back({x * s, y * s});
    return out;
  }
}

std::vector<DesignSample> random_shape_designs(std::size_t count, std::uint64_t seed) {
  const auto space = ParameterSpace::random_shape();
  const std::size_t area_index = space.index_of("ground_floor_area");
  Rng rng(seed ^ 0x5deece66dULL);
  std::vector<DesignSample> out;
  std::size_t i = 0;
  for (const auto& p : lhs_points(space, count, seed)) {
    DesignConfig c = space.apply(p);
    const double area = p[area_index];
    c.length = c.width = std::sqrt(area);
    out.push_back({sample_id("shape-", i++), c, Footprint::extruded(random_rectilinear_outline(rng, area), c.num_floors)});
  }
  return out;
}

std::vector<DesignSample> setback_designs(std::size_t count, std::uint64_t seed) {
  const auto space = ParameterSpace::standard();
  const auto shape = BuildingShape::setback(0.5);
  std::vector<DesignSample> out;
  std::size_t i = 0;
  for (auto c : lhs_samples(space, count, seed)) {
    c.num_floors = 4;
    out.push_back({sample_id("setback-", i++), c, shape.footprint_for(c)});
  }
  return out;
}

std::vector<SampleRecord> simulate_designs(const std::vector<DesignSample>& designs, const WeatherSeries& weather) {
  std::vector<SampleRecord> out(designs.size());
  parallel_for(designs.size(), [&](std::size_t i) {
    out[i] = simulate_sample(designs[i].id, designs[i].config, designs[i].footprint, weather);
  });
  return out;
}

json sample_to_json(const SampleRecord& s, const Footprint& footprint) {
  return {{"id", s.id},
          {"config", config_to_json(s.config)},
          {"footprint", footprint_to_json(footprint)},
          {"geometry", geometry_to_json(s.geometry)},
          {"summary", summary_to_json(s.summary)}};
}

SampleRecord sample_from_json(const json& j) {
  for (const char* key : {"id", "config", "footprint", "summary"}) {
    if (!j.contains(key)) throw ValidationError(std::string("sample record lacks '") + key + "'");
  }
  SampleRecord s;
  s.id = j["id"].get<std::string>();
  s.config = config_from_json(j["config"]);
  s.geometry = derive_geometry(s.config, footprint_from_json(j["footprint"]));
  s.summary = summary_from_json(j["summary"]);
  return s;
}

json TestSetResult::to_json() const {
  std::vector<double> signed_component, signed_monolithic;
  for (const auto& r : rows) {
    signed_component.push_back(r.component - r.truth);
    signed_monolithic.push_back(r.monolithic - r.truth);
  }
  return {{"name", name},
          {"samples", rows.size()},
          {"unit", units::kEui},
          {"component", component.to_json()},
          {"monolithic", monolithic.to_json()},
          {"signed_error", {{"component", signed_component}, {"monolithic", signed_monolithic}}}};
}

std::string TestSetResult::to_csv() const {
  std::ostringstream out;
  out << "id,truth [kWh/m2a],component [kWh/m2a],monolithic [kWh/m2a]\n";
  for (const auto& r : rows) {
    out << r.id << "," << format_double(r.truth) << "," << format_double(r.component) << ","
        << format_double(r.monolithic) << "\n";
  }
  return out.str();
}

TestSetResult evaluate_test_set(const std::string& name, const std::vector<SampleRecord>& samples,
                                const ModelBundle& bundle, const MlpModel& monolithic) {
  TestSetResult r;
  r.name = name;
  r.rows.resize(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto& s = samples[i];
    auto& row = r.rows[i];
    row.id = s.id;
    row.truth = s.summary.eui;
    row.component = build_graph(s.config, s.geometry, bundle).evaluate().output;
    row.monolithic = predict_monolithic(monolithic, s.config, s.geometry).eui;
  });
  std::vector<double> t, c, m;
  for (const auto& row : r.rows) {
    t.push_back(row.truth);
    c.push_back(row.component);
    m.push_back(row.monolithic);
  }
  r.component = compute_metrics(c, t);
  r.monolithic = compute_metrics(m, t);
  return r;
}

const InterfaceSeries& WhiteboxReport::at(std::string_view name) const {
  for (const auto& s : interfaces) {
    if (s.name == name) return s;
  }
  throw ValidationError("no interface '" + std::string(name) + "'");
}

json WhiteboxReport::to_json(bool include_points) const {
  json out = json::array();
  for (const auto& s : interfaces) {
    json j = {{"interface", s.name}, {"unit", s.unit}, {"envelope", s.envelope}, {"metrics", s.metrics.to_json()}};
    if (include_points) {
      j["truth"] = s.truth;
      j["predicted"] = s.predicted;
    }
    out.push_back(j);
  }
  return out;
}

WhiteboxReport whitebox_interface_test(const ModelBundle& bundle, const std::vector<SampleRecord>& samples) {
  constexpr std::size_t kElementKinds = 5;
  struct PerSample {
    std::array<std::vector<double>, kElementKinds> truth, predicted;
    double heating = 0.0, cooling = 0.0, lighting = 0.0, eui = 0.0;
  };
  std::vector<PerSample> per(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto& s = samples[i];
    const CompositionGraph g = build_graph(s.config, s.geometry, bundle);
    const Evaluation e = g.evaluate();
    auto& p = per[i];
    for (const auto& node : g.nodes()) {
      if (node.role != NodeRole::Component || node.level != 1 || !node.kind) continue;
      const ElementAverage* truth = s.summary.find(node.id);
      if (!truth) throw ExtractionError("sample '" + s.id + "': oracle summary lacks field '" + node.id + "'");
      const auto k = static_cast<std::size_t>(*node.kind);
      p.truth[k].push_back(truth->mean_flow);
      p.predicted[k].push_back(e.value(node.id, "heat_flow"));
    }
    p.heating = e.value("zone.heating", "heating_load");
    p.cooling = e.value("zone.cooling", "cooling_load");
    p.lighting = e.value("zone.lighting", "lighting_load");
    p.eui = e.output;
  });

  WhiteboxReport report;
  for (std::size_t k = 0; k < kElementKinds; ++k) {
    InterfaceSeries s;
    s.name = std::string(to_string(static_cast<ComponentKind>(k)));
    s.unit = units::kAverageFlow;
    s.envelope = true;
    for (const auto& p : per) {
      s.truth.insert(s.truth.end(), p.truth[k].begin(), p.truth[k].end());
      s.predicted.insert(s.predicted.end(), p.predicted[k].begin(), p.predicted[k].end());
    }
    report.interfaces.push_back(std::move(s));
  }
  auto add = [&](std::string name, std::string unit, auto truth_of, auto predicted_of) {
    InterfaceSeries s;
    s.name = std::move(name);
    s.unit = std::move(unit);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      s.truth.push_back(truth_of(samples[i]));
      s.predicted.push_back(predicted_of(per[i]));
    }
    report.interfaces.push_back(std::move(s));
  };
  add("zone.heating", units::kLoad, [](const SampleRecord& s) { return s.summary.heating_load; },
      [](const PerSample& p) { return p.heating; });
  add("zone.cooling", units::kLoad, [](const SampleRecord& s) { return s.summary.cooling_load; },
      [](const PerSample& p) { return p.cooling; });
  add("zone.lighting", units::kLoad, [](const SampleRecord& s) { return s.summary.lighting_load; },
      [](const PerSample& p) { return p.lighting; });
  add("building.eui", units::kEui, [](const SampleRecord& s) { return s.summary.eui; },
      [](const PerSample& p) { return p.eui; });
  for (auto& s : report.interfaces) {
    if (s.truth.size() >= 2) s.metrics = compute_metrics(s.predicted, s.truth);
    s.metrics.count = s.truth.size();
  }
  return report;
}

json DistributionComparison::to_json() const {
  auto summaries = [&](const std::vector<DistributionSummary>& v) {
    json out = json::array();
    for (const auto& s : v) {
      out.push_back({{"name", s.name}, {"unit", s.unit}, {"quantiles", s.quantiles}, {"mean", s.mean},
                     {"histogram", s.histogram}});
    }
    return out;
  };
  json names = json::array();
  for (const auto& c : columns) names.push_back({{"name", c.name}, {"unit", c.unit}});
  return {{"threshold", threshold},
          {"threshold_unit", units::kEui},
          {"total", total},
          {"selected", selected},
          {"empty_subset", empty_subset},
          {"quantile_levels", kQuantileLevels},
          {"columns", names},
          {"bin_edges", edges},
          {"full", summaries(full)},
          {"low_energy", summaries(low)}};
}

DesignTable design_table(const std::vector<DesignConfig>& configs, const BuildingShape& shape,
                         const ModelBundle& bundle) {
  static const std::pair<const char*, const char*> kInterfaces[] = {
      {"sum.wall", "wall_heat_flow"},         {"sum.window", "window_heat_flow"},
      {"sum.floor", "floor_heat_flow"},       {"sum.roof", "roof_heat_flow"},
      {"sum.infiltration", "infiltration_heat_flow"}, {"zone.heating", "heating_load"},
      {"zone.cooling", "cooling_load"},       {"zone.lighting", "lighting_load"},
      {"intensity.heating", "heating_load"},  {"intensity.cooling", "cooling_load"},
      {"intensity.lighting", "lighting_load"}};
  DesignTable t;
  const auto space = ParameterSpace::standard();
  for (const auto& r : space.ranges()) t.columns.push_back({r.name, r.unit});
  std::vector<Evaluation> evals(configs.size());
  parallel_for(configs.size(), [&](std::size_t i) { evals[i] = predict_design(configs[i], shape, bundle); });
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::vector<double> row;
    for (const auto& r : space.ranges()) row.push_back(get_field(configs[i], r.name));
    for (const auto& [node, output] : kInterfaces) {
      const Activation* a = evals[i].find(node, output);
      if (!a) throw StructuralError("design table: no activation " + std::string(node) + "." + output);
      if (i == 0) t.columns.push_back({std::string(node) + "." + output, a->unit});
      row.push_back(a->value);
    }
    t.rows.push_back(std::move(row));
    t.eui.push_back(evals[i].output);
  }
  return t;
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

DistributionSummary summarize(const Column& c, const std::vector<double>& v, const std::vector<double>& edges) {
  DistributionSummary s;
  s.name = c.name;
  s.unit = c.unit;
  for (double q : kQuantileLevels) s.quantiles.push_back(quantile(v, q));
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  const std::size_t bins = edges.size() - 1;
  s.histogram.assign(bins, 0);
  for (double x : v) {
    std::size_t b = 0;
    while (b + 1 < bins && x >= edges[b + 1]) ++b;
    ++s.histogram[b];
  }
  return s;
}

}  // namespace

DistributionComparison low_energy_compare(const DesignTable& table, double threshold, std::size_t bins) {
  if (table.rows.empty()) throw ValidationError("design table is empty");
  if (bins == 0) throw ValidationError("histogram needs at least one bin");
  DistributionComparison d;
  d.threshold = threshold;
  d.total = table.rows.size();
  d.columns = table.columns;
  std::vector<std::size_t> low;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.eui[i] < threshold) low.push_back(i);
  }
  d.selected = low.size();
  d.empty_subset = low.empty();
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    std::vector<double> all;
    for (const auto& r : table.rows) all.push_back(r[c]);
    const double lo = *std::min_element(all.begin(), all.end());
    double hi = *std::max_element(all.begin(), all.end());
    if (hi <= lo) hi = lo + 1.0;
    std::vector<double> edges;
    for (std::size_t b = 0; b <= bins; ++b) edges.push_back(lo + (hi - lo) * static_cast<double>(b) / bins);
    d.full.push_back(summarize(table.columns[c], all, edges));
    if (!low.empty()) {
      std::vector<double> sub;
      for (auto i : low) sub.push_back(table.rows[i][c]);
      d.low.push_back(summarize(table.columns[c], sub, edges));
    }
    d.edges.push_back(std::move(edges));
  }
  return d;
}

}  // namespace cbml
