#include "cbml/trees.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

#include "cbml/util.hpp"

namespace cbml {

using nlohmann::json;

double RegressionTree::scale(std::size_t f, double x) const {
  const double span = feature_max[f] - feature_min[f];
  return span > 0.0 ? (x - feature_min[f]) / span : 0.0;
}

double RegressionTree::unscale(std::size_t f, double s) const {
  return feature_min[f] + s * (feature_max[f] - feature_min[f]);
}

int RegressionTree::leaf_index(std::span<const double> x) const {
  if (x.size() != features.size()) {
    throw ValidationError("tree expects " + std::to_string(features.size()) + " features, got " +
                          std::to_string(x.size()));
  }
  int i = 0;
  while (!nodes[static_cast<std::size_t>(i)].leaf) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = scale(static_cast<std::size_t>(n.feature), x[static_cast<std::size_t>(n.feature)]) <= n.threshold_scaled
            ? n.left
            : n.right;
  }
  return i;
}

double RegressionTree::predict(std::span<const double> x) const {
  return nodes[static_cast<std::size_t>(leaf_index(x))].value;
}

Eigen::VectorXd RegressionTree::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(r, c);
    out[r] = predict(row);
  }
  return out;
}

std::vector<int> RegressionTree::leaves() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].leaf) out.push_back(static_cast<int>(i));
  }
  return out;
}

int RegressionTree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

json RegressionTree::to_json() const {
  std::function<json(int)> emit = [&](int i) -> json {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    json j = {{"id", i}, {"depth", n.depth}, {"value", n.value}, {"count", n.count}, {"sse", n.sse}};
    if (n.leaf) {
      j["leaf"] = true;
    } else {
      const auto& f = features[static_cast<std::size_t>(n.feature)];
      j["leaf"] = false;
      j["feature"] = f.name;
      j["unit"] = f.unit;
      j["threshold"] = n.threshold;
      j["threshold_scaled"] = n.threshold_scaled;
      j["left"] = emit(n.left);
      j["right"] = emit(n.right);
    }
    return j;
  };
  json feats = json::array();
  for (const auto& f : features) feats.push_back({{"name", f.name}, {"unit", f.unit}});
  return {{"features", feats},
          {"target", {{"name", target.name}, {"unit", target.unit}}},
          {"max_depth", options.max_depth},
          {"min_leaf", options.min_leaf},
          {"root", nodes.empty() ? json(nullptr) : emit(0)}};
}

namespace {

bool better(double candidate, double incumbent, double scale) { return candidate < incumbent - 1e-12 * scale; }

double sse_of(const Eigen::VectorXd& y, const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  double mean = 0.0;
  for (auto r : rows) mean += y[static_cast<Eigen::Index>(r)];
  mean /= static_cast<double>(rows.size());
  double s = 0.0;
  for (auto r : rows) s += (y[static_cast<Eigen::Index>(r)] - mean) * (y[static_cast<Eigen::Index>(r)] - mean);
  return s;
}

struct Builder {
  const Eigen::MatrixXd& scaled;
  const Eigen::VectorXd& y;
  CartOptions options;
  RegressionTree& tree;

  // sorted[f] holds this node's rows ordered by scaled feature f.
  int build(std::vector<std::vector<std::size_t>> sorted, int depth) {
    const std::vector<std::size_t>& rows = sorted.front();
    const std::size_t n = rows.size();
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    {
      TreeNode& node = tree.nodes.back();
      node.depth = depth;
      node.count = n;
      double mean = 0.0;
      for (auto r : rows) mean += y[static_cast<Eigen::Index>(r)];
      node.value = n ? mean / static_cast<double>(n) : 0.0;
      node.sse = sse_of(y, rows);
    }
    const double parent_sse = tree.nodes[static_cast<std::size_t>(index)].sse;
    const double mean = tree.nodes[static_cast<std::size_t>(index)].value;

    std::optional<SplitChoice> best;
    if (depth < options.max_depth && n >= 2 * options.min_leaf && parent_sse > 0.0) {
      for (std::size_t f = 0; f < sorted.size(); ++f) {
        const auto& order = sorted[f];
        const auto fc = static_cast<Eigen::Index>(f);
        double total1 = 0.0, total2 = 0.0;
        for (auto r : order) {
          const double v = y[static_cast<Eigen::Index>(r)] - mean;
          total1 += v;
          total2 += v * v;
        }
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
          const double v = y[static_cast<Eigen::Index>(order[i - 1])] - mean;
          s1 += v;
          s2 += v * v;
          if (i < options.min_leaf || n - i < options.min_leaf) continue;
          const double lo = scaled(static_cast<Eigen::Index>(order[i - 1]), fc);
          const double hi = scaled(static_cast<Eigen::Index>(order[i]), fc);
          if (!(lo < hi)) continue;
          const double nl = static_cast<double>(i);
          const double nr = static_cast<double>(n - i);
          const double sse = (s2 - s1 * s1 / nl) + ((total2 - s2) - (total1 - s1) * (total1 - s1) / nr);
          if (!best || better(sse, best->sse, parent_sse)) {
            best = SplitChoice{static_cast<int>(f), 0.5 * (lo + hi), sse};
          }
        }
      }
    }
    if (!best || !better(best->sse, parent_sse, parent_sse)) {
      tree.nodes[static_cast<std::size_t>(index)].samples = rows;
      return index;
    }

    const auto bf = static_cast<Eigen::Index>(best->feature);
    std::vector<std::vector<std::size_t>> left(sorted.size()), right(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      for (auto r : sorted[f]) {
        (scaled(static_cast<Eigen::Index>(r), bf) <= best->threshold_scaled ? left[f] : right[f]).push_back(r);
      }
    }
    sorted.clear();
    sorted.shrink_to_fit();
    const int l = build(std::move(left), depth + 1);
    const int r = build(std::move(right), depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
    node.leaf = false;
    node.feature = best->feature;
    node.threshold_scaled = best->threshold_scaled;
    node.threshold = tree.unscale(static_cast<std::size_t>(best->feature), best->threshold_scaled);
    node.left = l;
    node.right = r;
    return index;
  }
};

Eigen::MatrixXd scale_features(const Eigen::MatrixXd& x, std::vector<double>& mn, std::vector<double>& mx) {
  mn.resize(static_cast<std::size_t>(x.cols()));
  mx.resize(static_cast<std::size_t>(x.cols()));
  Eigen::MatrixXd s(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto f = static_cast<std::size_t>(c);
    mn[f] = x.col(c).minCoeff();
    mx[f] = x.col(c).maxCoeff();
    const double span = mx[f] - mn[f];
    if (span > 0.0) {
      s.col(c) = (x.col(c).array() - mn[f]) / span;
    } else {
      s.col(c).setZero();
    }
  }
  return s;
}

std::vector<std::vector<std::size_t>> presort(const Eigen::MatrixXd& scaled) {
  std::vector<std::vector<std::size_t>> sorted(static_cast<std::size_t>(scaled.cols()));
  for (Eigen::Index c = 0; c < scaled.cols(); ++c) {
    auto& order = sorted[static_cast<std::size_t>(c)];
    order.resize(static_cast<std::size_t>(scaled.rows()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scaled(static_cast<Eigen::Index>(a), c) < scaled(static_cast<Eigen::Index>(b), c);
    });
  }
  if (sorted.empty()) {
    // No features: a single leaf over every row.
    sorted.emplace_back(static_cast<std::size_t>(scaled.rows()));
    std::iota(sorted[0].begin(), sorted[0].end(), std::size_t{0});
  }
  return sorted;
}

RegressionTree build_tree(const Eigen::MatrixXd& scaled, const std::vector<double>& mn, const std::vector<double>& mx,
                          const std::vector<std::vector<std::size_t>>& sorted, const Eigen::VectorXd& y,
                          std::vector<Column> features, Column target, const CartOptions& options) {
  RegressionTree tree;
  tree.features = std::move(features);
  tree.target = std::move(target);
  tree.feature_min = mn;
  tree.feature_max = mx;
  tree.options = options;
  Builder b{scaled, y, options, tree};
  b.build(sorted, 0);
  return tree;
}

void check_shapes(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<Column>& features) {
  if (x.rows() != y.size()) throw ValidationError("feature and target row counts differ");
  if (static_cast<std::size_t>(x.cols()) != features.size()) throw ValidationError("feature names do not match columns");
  if (!x.allFinite() || !y.allFinite()) throw ValidationError("tree training data must be finite");
}

}  // namespace

RegressionTree fit_cart(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<Column> features,
                        Column target, const CartOptions& options) {
  check_shapes(x, y, features);
  if (options.max_depth < 0) throw ValidationError("max_depth must be non-negative");
  if (options.min_leaf < 1) throw ValidationError("min_leaf must be at least 1");
  if (static_cast<std::size_t>(x.rows()) < 2 * options.min_leaf) {
    throw ValidationError("tree needs at least " + std::to_string(2 * options.min_leaf) + " rows, got " +
                          std::to_string(x.rows()));
  }
  std::vector<double> mn, mx;
  const Eigen::MatrixXd s = scale_features(x, mn, mx);
  return build_tree(s, mn, mx, presort(s), y, std::move(features), std::move(target), options);
}

RegressionTree fit_cart(const Dataset& data, const CartOptions& options) {
  if (data.output_columns.empty()) throw ValidationError("dataset has no target column");
  return fit_cart(data.inputs, data.outputs.col(0), data.input_columns, data.output_columns.front(), options);
}

std::optional<SplitChoice> brute_force_split(const Eigen::MatrixXd& scaled, const Eigen::VectorXd& y,
                                             std::size_t min_leaf) {
  const auto n = static_cast<std::size_t>(scaled.rows());
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const double parent = sse_of(y, all);
  std::optional<SplitChoice> best;
  for (Eigen::Index f = 0; f < scaled.cols(); ++f) {
    std::vector<double> values(scaled.col(f).data(), scaled.col(f).data() + n);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double t = 0.5 * (values[k] + values[k + 1]);
      std::vector<std::size_t> l, r;
      for (std::size_t i = 0; i < n; ++i) (scaled(static_cast<Eigen::Index>(i), f) <= t ? l : r).push_back(i);
      if (l.size() < min_leaf || r.size() < min_leaf) continue;
      const double sse = sse_of(y, l) + sse_of(y, r);
      if (!best || better(sse, best->sse, parent)) best = SplitChoice{static_cast<int>(f), t, sse};
    }
  }
  if (best && !better(best->sse, parent, parent)) return std::nullopt;
  return best;
}

std::string RuleCondition::to_string() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", threshold);
  return name + (greater ? " > " : " <= ") + buf + (unit == "-" ? "" : " " + unit);
}

std::string RulePath::to_string(const std::string& target_name) const {
  std::string s = "IF ";
  if (conditions.empty()) s += "(always)";
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    if (i) s += " AND ";
    s += conditions[i].to_string();
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", prediction);
  return s + " THEN " + target_name + " = " + buf + " " + unit + " (n=" + std::to_string(count) + ")";
}

std::string RuleSet::to_text(const RegressionTree& tree) const {
  std::string out;
  for (const auto& r : rules) out += r.to_string(tree.target.name) + "\n";
  for (const auto& d : dependences) {
    out += "dependence at node " + std::to_string(d.node) + ": after " + d.feature + ", left splits on " +
           d.left_feature + ", right on " + d.right_feature + "\n";
  }
  return out;
}

json RuleSet::to_json() const {
  json rs = json::array();
  for (const auto& r : rules) {
    json conds = json::array();
    for (const auto& c : r.conditions) {
      conds.push_back({{"feature", c.name}, {"unit", c.unit}, {"op", c.greater ? ">" : "<="}, {"threshold", c.threshold}});
    }
    rs.push_back({{"leaf", r.leaf}, {"conditions", conds}, {"prediction", r.prediction}, {"unit", r.unit},
                  {"count", r.count}});
  }
  json ds = json::array();
  for (const auto& d : dependences) {
    ds.push_back({{"node", d.node}, {"feature", d.feature}, {"left_feature", d.left_feature},
                  {"right_feature", d.right_feature}});
  }
  return {{"rules", rs}, {"dependences", ds}};
}

RuleSet extract_rules(const RegressionTree& tree) {
  RuleSet set;
  if (tree.nodes.empty()) return set;
  std::vector<RuleCondition> path;
  std::function<void(int)> walk = [&](int i) {
    const auto& n = tree.nodes[static_cast<std::size_t>(i)];
    if (n.leaf) {
      set.rules.push_back({i, path, n.value, tree.target.unit, n.count});
      return;
    }
    const auto f = static_cast<std::size_t>(n.feature);
    const auto& l = tree.nodes[static_cast<std::size_t>(n.left)];
    const auto& r = tree.nodes[static_cast<std::size_t>(n.right)];
    if (!l.leaf && !r.leaf && l.feature != r.feature) {
      set.dependences.push_back({i, tree.features[f].name, tree.features[static_cast<std::size_t>(l.feature)].name,
                                 tree.features[static_cast<std::size_t>(r.feature)].name});
    }
    path.push_back({f, tree.features[f].name, tree.features[f].unit, false, n.threshold});
    walk(n.left);
    path.back().greater = true;
    walk(n.right);
    path.pop_back();
  };
  walk(0);
  return set;
}

json LeafLinearModel::to_json() const {
  json cs = json::array();
  for (std::size_t i = 0; i < features.size(); ++i) {
    cs.push_back({{"feature", features[i]}, {"coefficient", coefficients[i]}, {"unit", units[i]}});
  }
  return {{"leaf", leaf}, {"coefficients", cs}, {"intercept", intercept}, {"samples", samples}};
}

LeafLinearModel leaf_linear_model(const RegressionTree& tree, int leaf, const Dataset& data,
                                  const std::vector<std::string>& features) {
  if (leaf < 0 || static_cast<std::size_t>(leaf) >= tree.nodes.size() || !tree.nodes[static_cast<std::size_t>(leaf)].leaf) {
    throw ValidationError("node " + std::to_string(leaf) + " is not a leaf");
  }
  const auto& rows = tree.nodes[static_cast<std::size_t>(leaf)].samples;
  if (rows.size() < 3 * features.size()) {
    throw ValidationError("leaf " + std::to_string(leaf) + " has " + std::to_string(rows.size()) +
                          " samples, needs at least " + std::to_string(3 * features.size()));
  }
  std::vector<Eigen::Index> cols;
  LeafLinearModel m;
  m.leaf = leaf;
  m.samples = rows.size();
  const Column& target = data.output_columns.at(0);
  for (const auto& f : features) {
    Eigen::Index c = 0;
    while (c < data.inputs.cols() && data.input_columns[static_cast<std::size_t>(c)].name != f) ++c;
    if (c == data.inputs.cols()) throw ValidationError("unknown feature '" + f + "'");
    cols.push_back(c);
    m.features.push_back(f);
    m.units.push_back(target.unit + "/" + data.input_columns[static_cast<std::size_t>(c)].unit);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = data.inputs(r, cols[static_cast<std::size_t>(j)]);
    y[i] = data.outputs(r, 0);
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - mean;
  const double ymean = y.mean();
  // A feature that is constant within the leaf explains nothing: slope 0.
  m.coefficients.assign(static_cast<std::size_t>(p), 0.0);
  std::vector<Eigen::Index> varying;
  Eigen::VectorXd norms = xc.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (norms[j] > 1e-12 * std::max(1.0, x.col(j).cwiseAbs().maxCoeff()) * std::sqrt(static_cast<double>(n))) {
      varying.push_back(j);
    }
  }
  if (!varying.empty()) {
    const auto q = static_cast<Eigen::Index>(varying.size());
    // Scale columns so the rank test is unit independent.
    Eigen::MatrixXd xs(n, q);
    for (Eigen::Index k = 0; k < q; ++k) xs.col(k) = xc.col(varying[static_cast<std::size_t>(k)]) / norms[varying[static_cast<std::size_t>(k)]];
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
    qr.setThreshold(1e-10);
    if (qr.rank() < q) {
      std::string names;
      const auto perm = qr.colsPermutation().indices();
      for (Eigen::Index k = qr.rank(); k < q; ++k) {
        names += (names.empty() ? "" : ", ") + features[static_cast<std::size_t>(varying[static_cast<std::size_t>(perm[k])])];
      }
      throw ValidationError("collinear leaf features: " + names);
    }
    const Eigen::VectorXd beta_s = qr.solve((y.array() - ymean).matrix());
    for (Eigen::Index k = 0; k < q; ++k) {
      const auto j = varying[static_cast<std::size_t>(k)];
      m.coefficients[static_cast<std::size_t>(j)] = beta_s[k] / norms[j];
    }
  }
  m.intercept = ymean;
  for (Eigen::Index j = 0; j < p; ++j) m.intercept -= m.coefficients[static_cast<std::size_t>(j)] * mean[j];
  return m;
}

double GbdtModel::predict(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(x);
  return init + shrinkage * s;
}

Eigen::VectorXd GbdtModel::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(x.rows(), 0.0);
  for (const auto& t : trees) out += t.predict(x);
  return (init + shrinkage * out.array()).matrix();
}

json GbdtModel::to_json() const {
  json ts = json::array();
  for (const auto& t : trees) ts.push_back(t.to_json());
  json feats = json::array();
  for (const auto& f : features) feats.push_back({{"name", f.name}, {"unit", f.unit}});
  return {{"format", "cbml-gbdt/1"},
          {"init", init},
          {"shrinkage", shrinkage},
          {"features", feats},
          {"target", {{"name", target.name}, {"unit", target.unit}}},
          {"train_loss", train_loss},
          {"trees", ts}};
}

GbdtModel fit_gbdt(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<Column> features, Column target,
                   const GbdtOptions& options) {
  check_shapes(x, y, features);
  if (x.rows() < 100) throw ValidationError("boosting needs at least 100 rows, got " + std::to_string(x.rows()));
  if (!(options.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  GbdtModel m;
  m.features = features;
  m.target = target;
  m.shrinkage = options.learning_rate;
  m.init = y.mean();
  std::vector<double> mn, mx;
  const Eigen::MatrixXd s = scale_features(x, mn, mx);
  const auto sorted = presort(s);
  const CartOptions cart{options.max_depth, options.min_leaf};

  Eigen::VectorXd pred = Eigen::VectorXd::Constant(y.size(), m.init);
  m.train_loss.push_back((y - pred).squaredNorm() / static_cast<double>(y.size()));
  for (std::size_t stage = 0; stage < options.stages; ++stage) {
    const Eigen::VectorXd residual = y - pred;
    RegressionTree t = build_tree(s, mn, mx, sorted, residual, features, target, cart);
    // Leaf values are read through the training rows, avoiding a re-scale.
    for (const auto& node : t.nodes) {
      if (!node.leaf) continue;
      for (auto r : node.samples) pred[static_cast<Eigen::Index>(r)] += m.shrinkage * node.value;
    }
    for (auto& node : t.nodes) node.samples.clear();
    m.trees.push_back(std::move(t));
    m.train_loss.push_back((y - pred).squaredNorm() / static_cast<double>(y.size()));
  }
  return m;
}

}  // namespace cbml
