#include "cbml/sensitivity.hpp"

#include <cmath>
#include <limits>

#include "cbml/util.hpp"

namespace cbml {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t npos = static_cast<std::size_t>(-1);

}  // namespace

std::vector<std::string> PerturbationPlan::default_variables() {
  std::vector<std::string> out;
  for (const auto& f : config_fields()) {
    if (f.integer || f.name == "heating_setpoint" || f.name == "cooling_setpoint") continue;
    out.emplace_back(f.name);
  }
  return out;
}

std::vector<double> PerturbationPlan::level_set() const {
  if (!levels.empty()) return levels;
  if (delta == 0.0) return {1.0};
  return {1.0 - delta, 1.0, 1.0 + delta};
}

void PerturbationPlan::validate() const {
  if (!(delta >= 0.0 && delta <= 0.2)) throw ValidationError("delta must lie in (0, 0.2]");
  if (variables.empty()) throw ValidationError("perturbation plan varies no variables");
  for (const auto& v : variables) {
    const auto* f = find_config_field(v);
    if (!f) throw ValidationError("unknown design variable '" + v + "'");
    if (f->integer) throw ValidationError("integer variable '" + v + "' cannot be scaled by a delta level");
  }
  if (samples < 10 * variables.size()) {
    throw ValidationError("plan needs at least " + std::to_string(10 * variables.size()) + " samples for " +
                          std::to_string(variables.size()) + " variables");
  }
  for (double l : level_set()) {
    if (!(l > 0.0)) throw ValidationError("perturbation levels must be positive");
  }
}

std::size_t LocalDataset::output_index(std::string_view name) const {
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i].name == name) return i;
  }
  return npos;
}

LocalDataset dse_samples(const PerturbationPlan& plan, const DesignEvaluator& evaluate) {
  plan.validate();
  LocalDataset d;
  d.delta = plan.delta;
  for (const auto& v : plan.variables) {
    d.variables.push_back({v, std::string(find_config_field(v)->unit)});
    d.base_values.push_back(get_field(plan.base, v));
  }
  d.base = evaluate(plan.base);
  for (const auto& a : d.base.trace) d.outputs.push_back({a.node + "." + a.output, a.unit});

  const auto levels = plan.level_set();
  Rng rng(plan.seed);
  d.configs.resize(plan.samples, plan.base);
  d.inputs.assign(plan.samples, std::vector<double>(plan.variables.size()));
  for (std::size_t s = 0; s < plan.samples; ++s) {
    for (std::size_t v = 0; v < plan.variables.size(); ++v) {
      const double value = d.base_values[v] * levels[rng.index(levels.size())];
      set_field(d.configs[s], plan.variables[v], value);
      d.inputs[s][v] = value;
    }
  }

  d.geometries.resize(plan.samples);
  d.values.assign(plan.samples, std::vector<double>(d.outputs.size(), kNaN));
  std::vector<std::string> errors(plan.samples);
  parallel_for(plan.samples, [&](std::size_t s) {
    try {
      d.geometries[s] = derive_geometry(d.configs[s], plan.shape.footprint_for(d.configs[s]));
      const Evaluation ev = evaluate(d.configs[s]);
      for (const auto& a : ev.trace) {
        const std::size_t j = d.output_index(a.node + "." + a.output);
        if (j != npos) d.values[s][j] = a.value;
      }
    } catch (const std::exception& e) {
      errors[s] = e.what();
    }
  });
  for (std::size_t s = 0; s < plan.samples; ++s) {
    if (!errors[s].empty()) d.failures.push_back("sample " + std::to_string(s) + ": " + errors[s]);
  }
  return d;
}

LocalDataset dse_samples(const PerturbationPlan& plan, const ModelBundle& bundle) {
  const BuildingShape shape = plan.shape;
  return dse_samples(plan, [&bundle, shape](const DesignConfig& c) { return predict_design(c, shape, bundle); });
}

std::optional<Eigen::VectorXd> ols_slopes(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n < p + 1) return std::nullopt;
  if (p == 0) return Eigen::VectorXd();
  // Centering removes the intercept column and improves conditioning.
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - mean;
  const Eigen::VectorXd yc = y.array() - y.mean();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) return std::nullopt;
  return Eigen::VectorXd(qr.solve(yc));
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& raw) {
  Eigen::MatrixXd out = raw;
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    double m = 0.0;
    for (Eigen::Index r = 0; r < raw.rows(); ++r) {
      if (std::isfinite(raw(r, c))) m = std::max(m, std::abs(raw(r, c)));
    }
    if (m > 0.0) out.col(c) /= m;
  }
  return out;
}

ActivityPassivity activity_passivity(const Eigen::MatrixXd& s) {
  ActivityPassivity ap;
  ap.activity.assign(static_cast<std::size_t>(s.rows()), 0.0);
  ap.passivity.assign(static_cast<std::size_t>(s.cols()), 0.0);
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      if (!std::isfinite(s(r, c))) continue;
      ap.activity[static_cast<std::size_t>(r)] += std::abs(s(r, c));
      ap.passivity[static_cast<std::size_t>(c)] += std::abs(s(r, c));
    }
  }
  return ap;
}

namespace {

// Regressors of one consumer node: traced activations and static inputs.
struct ConsumerSpec {
  std::string output;  // "zone.heating.heating_load"
  std::vector<std::string> activations;
  std::vector<std::function<double(const DesignConfig&, const GeometrySummary&)>> statics;
};

std::vector<ConsumerSpec> consumer_specs() {
  using C = const DesignConfig&;
  using G = const GeometrySummary&;
  const std::vector<std::string> flows{"sum.wall.wall_heat_flow", "sum.window.window_heat_flow",
                                       "sum.floor.floor_heat_flow", "sum.roof.roof_heat_flow",
                                       "sum.infiltration.infiltration_heat_flow"};
  const std::vector<std::function<double(C, G)>> zone_statics{
      [](C, G g) { return g.total_floor_area; },      [](C c, G) { return c.internal_mass_capacity; },
      [](C c, G) { return c.light_gain; },            [](C c, G) { return c.equipment_gain; },
      [](C c, G) { return c.operating_hours; },       [](C c, G) { return c.occupancy_density; }};
  return {
      {"zone.heating.heating_load", flows, zone_statics},
      {"zone.cooling.cooling_load", flows, zone_statics},
      {"building.eui",
       {"intensity.heating.heating_load", "intensity.cooling.cooling_load", "intensity.lighting.lighting_load"},
       {[](C c, G) { return c.boiler_efficiency; }, [](C c, G) { return c.cop_heating; },
        [](C c, G) { return c.cop_cooling; }}},
  };
}

// Entries far below the column's largest effect are regression round-off on
// outputs that do not depend on the variable.
void snap_round_off(Eigen::MatrixXd& m, Eigen::Index col) {
  double largest = 0.0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (std::isfinite(m(r, col))) largest = std::max(largest, std::abs(m(r, col)));
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (std::isfinite(m(r, col)) && std::abs(m(r, col)) <= 1e-9 * largest) m(r, col) = 0.0;
  }
}

}  // namespace

std::size_t SensitivityMatrix::row_index(std::string_view name) const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].name == name) return i;
  }
  throw ValidationError("no sensitivity row '" + std::string(name) + "'");
}

std::size_t SensitivityMatrix::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  throw ValidationError("no sensitivity column '" + std::string(name) + "'");
}

SensitivityMatrix sensitivities(const LocalDataset& data) {
  SensitivityMatrix m;
  m.delta = data.delta;
  m.columns = data.outputs;

  std::vector<std::size_t> good;
  for (std::size_t s = 0; s < data.size(); ++s) {
    bool ok = true;
    for (double v : data.values[s]) ok = ok && std::isfinite(v);
    if (ok) good.push_back(s);
  }
  if (!data.failures.empty()) {
    m.warnings.push_back(std::to_string(data.failures.size()) + " samples failed to evaluate and were skipped");
  }

  const auto specs = consumer_specs();
  std::vector<std::string> intermediates;
  for (const auto& spec : specs) {
    if (data.output_index(spec.output) == npos) continue;
    for (const auto& a : spec.activations) {
      if (data.output_index(a) == npos) continue;
      bool seen = false;
      for (const auto& i : intermediates) seen = seen || i == a;
      if (!seen) intermediates.push_back(a);
    }
  }

  for (const auto& v : data.variables) {
    m.rows.push_back(v);
    m.intermediate.push_back(false);
  }
  for (const auto& a : intermediates) {
    m.rows.push_back(data.outputs[data.output_index(a)]);
    m.intermediate.push_back(true);
  }
  const auto nv = static_cast<Eigen::Index>(data.variables.size());
  const auto n = static_cast<Eigen::Index>(good.size());
  m.raw = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.rows.size()), static_cast<Eigen::Index>(m.columns.size()));

  Eigen::MatrixXd x(n, nv);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index v = 0; v < nv; ++v) x(i, v) = data.inputs[good[static_cast<std::size_t>(i)]][static_cast<std::size_t>(v)];
  }
  auto column_values = [&](std::size_t col) {
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = data.values[good[static_cast<std::size_t>(i)]][col];
    return y;
  };
  const auto slopes = ols_slopes(x, Eigen::VectorXd::Zero(n));
  for (std::size_t c = 0; c < m.columns.size(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    const Eigen::VectorXd y = column_values(c);
    if (n > 0 && (y.array() == y[0]).all()) continue;  // constant output: all zero
    const auto beta = slopes ? ols_slopes(x, y) : std::nullopt;
    if (!beta) {
      m.warnings.push_back("rank-deficient design for output '" + m.columns[c].name + "'; entries undefined");
      for (Eigen::Index v = 0; v < nv; ++v) m.raw(v, ci) = kNaN;
      continue;
    }
    for (Eigen::Index v = 0; v < nv; ++v) {
      m.raw(v, ci) = (*beta)[v] * 2.0 * data.delta * data.base_values[static_cast<std::size_t>(v)];
    }
  }

  // Intermediate parameters: regress each consumer on its direct inputs.
  for (const auto& spec : specs) {
    const std::size_t out = data.output_index(spec.output);
    if (out == npos) continue;
    std::vector<Eigen::VectorXd> regs;
    std::vector<std::size_t> reg_rows;  // matrix row, or npos for statics
    std::vector<double> reg_base;
    for (const auto& a : spec.activations) {
      const std::size_t j = data.output_index(a);
      if (j == npos) continue;
      regs.push_back(column_values(j));
      reg_rows.push_back(m.row_index(a));
      reg_base.push_back(data.base.value(a.substr(0, a.rfind('.')), a.substr(a.rfind('.') + 1)));
    }
    for (const auto& f : spec.statics) {
      Eigen::VectorXd col(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto s = good[static_cast<std::size_t>(i)];
        col[i] = f(data.configs[s], data.geometries[s]);
      }
      regs.push_back(col);
      reg_rows.push_back(npos);
      reg_base.push_back(0.0);
    }
    // Regressors that do not vary carry no information.
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < regs.size(); ++k) {
      if (n > 0 && regs[k].maxCoeff() - regs[k].minCoeff() > 1e-12 * std::max(1.0, regs[k].cwiseAbs().maxCoeff())) {
        keep.push_back(k);
      }
    }
    Eigen::MatrixXd xr(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) xr.col(static_cast<Eigen::Index>(k)) = regs[keep[k]];
    const auto beta = ols_slopes(xr, column_values(out));
    const auto ci = static_cast<Eigen::Index>(out);
    for (std::size_t k = 0; k < keep.size(); ++k) {
      const std::size_t row = reg_rows[keep[k]];
      if (row == npos) continue;
      m.raw(static_cast<Eigen::Index>(row), ci) =
          beta ? (*beta)[static_cast<Eigen::Index>(k)] * 2.0 * data.delta * reg_base[keep[k]] : kNaN;
    }
    if (!beta) m.warnings.push_back("rank-deficient intermediate regression for '" + spec.output + "'");
  }

  for (Eigen::Index c = 0; c < m.raw.cols(); ++c) snap_round_off(m.raw, c);
  m.standardized = standardize(m.raw);
  return m;
}

double central_difference(const PerturbationPlan& plan, const DesignEvaluator& evaluate, std::string_view variable,
                          std::string_view output) {
  const auto dot = output.rfind('.');
  if (dot == std::string_view::npos) throw ValidationError("output must be written as node.output");
  const double base = get_field(plan.base, variable);
  DesignConfig up = plan.base;
  DesignConfig down = plan.base;
  set_field(up, variable, base * (1.0 + plan.delta));
  set_field(down, variable, base * (1.0 - plan.delta));
  const auto node = output.substr(0, dot);
  const auto name = output.substr(dot + 1);
  return evaluate(up).value(node, name) - evaluate(down).value(node, name);
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json SensitivityMatrix::to_json() const {
  json rows_j = json::array();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    rows_j.push_back({{"name", rows[r].name}, {"unit", rows[r].unit}, {"intermediate", static_cast<bool>(intermediate[r])}});
  }
  json cols_j = json::array();
  for (const auto& c : columns) cols_j.push_back({{"name", c.name}, {"unit", c.unit}});
  json raw_j = json::array();
  json std_j = json::array();
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    json a = json::array();
    json b = json::array();
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
      a.push_back(finite_or_null(raw(r, c)));
      b.push_back(finite_or_null(standardized(r, c)));
    }
    raw_j.push_back(std::move(a));
    std_j.push_back(std::move(b));
  }
  const auto ap = activity_passivity(standardized);
  return {{"delta", delta},
          {"rows", rows_j},
          {"columns", cols_j},
          {"raw", raw_j},
          {"standardized", std_j},
          {"activity", ap.activity},
          {"passivity", ap.passivity},
          {"warnings", warnings}};
}

std::string SensitivityMatrix::to_csv() const {
  std::string out = "output [unit]";
  for (const auto& r : rows) out += "," + r.name + " [" + r.unit + "]";
  out += '\n';
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out += columns[c].name + " [" + columns[c].unit + "]";
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double v = raw(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      out += "," + (std::isfinite(v) ? format_double(v) : std::string("nan"));
    }
    out += '\n';
  }
  return out;
}

}  // namespace cbml
