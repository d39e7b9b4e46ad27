#include "cbml/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbml/util.hpp"

namespace cbml {

using nlohmann::json;

Eigen::MatrixXd ScalerParams::scale(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    out.col(j) = (x.col(j).array() - min[j]) / (max[j] - min[j]);
  }
  return out;
}

Eigen::MatrixXd ScalerParams::unscale(const Eigen::MatrixXd& s) const {
  Eigen::MatrixXd out(s.rows(), s.cols());
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    out.col(j) = min[j] + s.col(j).array() * (max[j] - min[j]);
  }
  return out;
}

ScalerParams fit_scaler(const Eigen::MatrixXd& data, const std::vector<Column>& columns) {
  if (static_cast<std::size_t>(data.cols()) != columns.size()) {
    throw ValidationError("scaler column count does not match data");
  }
  if (data.rows() == 0) throw ValidationError("cannot fit a scaler on zero rows");
  ScalerParams p{columns, data.colwise().minCoeff().transpose(), data.colwise().maxCoeff().transpose()};
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (!(p.max[j] - p.min[j] > 1e-12)) {
      throw ValidationError("degenerate feature '" + columns[j].name + "': spread below 1e-12");
    }
  }
  return p;
}

Network Network::zeros(std::size_t inputs, std::size_t hidden, std::size_t outputs) {
  const auto d = static_cast<Eigen::Index>(inputs);
  const auto h = static_cast<Eigen::Index>(hidden);
  const auto k = static_cast<Eigen::Index>(outputs);
  return {Eigen::MatrixXd::Zero(h, d), Eigen::VectorXd::Zero(h), Eigen::MatrixXd::Zero(k, h),
          Eigen::VectorXd::Zero(k)};
}

Network Network::random(std::size_t inputs, std::size_t hidden, std::size_t outputs, std::uint64_t seed) {
  Network n = zeros(inputs, hidden, outputs);
  Rng rng(seed);
  const double b1 = 1.0 / std::sqrt(static_cast<double>(inputs));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index i = 0; i < n.hidden_weights.size(); ++i) n.hidden_weights.data()[i] = rng.uniform(-b1, b1);
  for (Eigen::Index i = 0; i < n.hidden_bias.size(); ++i) n.hidden_bias[i] = rng.uniform(-b1, b1);
  for (Eigen::Index i = 0; i < n.output_weights.size(); ++i) n.output_weights.data()[i] = rng.uniform(-b2, b2);
  for (Eigen::Index i = 0; i < n.output_bias.size(); ++i) n.output_bias[i] = rng.uniform(-b2, b2);
  return n;
}

Eigen::MatrixXd Network::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd h = (hidden_weights * x).colwise() + hidden_bias;
  h = h.cwiseMax(0.0);
  return (output_weights * h).colwise() + output_bias;
}

double Network::weight_norm_squared() const {
  return hidden_weights.squaredNorm() + output_weights.squaredNorm();
}

bool Network::finite() const {
  return hidden_weights.allFinite() && hidden_bias.allFinite() && output_weights.allFinite() &&
         output_bias.allFinite();
}

LossGradient loss_and_gradient(const Network& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double l2) {
  const double m = static_cast<double>(x.cols());
  const Eigen::MatrixXd z = (net.hidden_weights * x).colwise() + net.hidden_bias;
  const Eigen::MatrixXd h = z.cwiseMax(0.0);
  const Eigen::MatrixXd out = (net.output_weights * h).colwise() + net.output_bias;
  const Eigen::MatrixXd err = out - y;

  LossGradient r;
  r.loss = 0.5 * err.squaredNorm() / m + 0.5 * l2 / m * net.weight_norm_squared();

  const Eigen::MatrixXd d_out = err / m;
  r.gradient.output_weights = d_out * h.transpose() + (l2 / m) * net.output_weights;
  r.gradient.output_bias = d_out.rowwise().sum();
  Eigen::MatrixXd d_hidden = net.output_weights.transpose() * d_out;
  d_hidden = d_hidden.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
  r.gradient.hidden_weights = d_hidden * x.transpose() + (l2 / m) * net.hidden_weights;
  r.gradient.hidden_bias = d_hidden.rowwise().sum();
  return r;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (hidden_widths.empty() || l2_values.empty()) throw ValidationError("hyperparameter grid is empty");
  for (auto w : hidden_widths) {
    if (w == 0) throw ValidationError("hidden width must be positive");
  }
  for (auto a : l2_values) {
    if (!(a >= 0.0)) throw ValidationError("l2 coefficient must be non-negative");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ValidationError("validation_fraction must lie in (0, 1)");
  }
  if (batch_divisor == 0 || patience == 0 || max_epochs == 0) {
    throw ValidationError("batch_divisor, patience and max_epochs must be positive");
  }
}

json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"hidden_widths", hidden_widths},
          {"l2_values", l2_values},
          {"validation_fraction", validation_fraction},
          {"batch_divisor", batch_divisor},
          {"patience", patience},
          {"max_epochs", max_epochs},
          {"seed", seed},
          {"min_rows", min_rows},
          {"optimizer", "adam(beta1=0.9, beta2=0.999, eps=1e-8)"}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.hidden_widths = j.value("hidden_widths", c.hidden_widths);
  c.l2_values = j.value("l2_values", c.l2_values);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.batch_divisor = j.value("batch_divisor", c.batch_divisor);
  c.patience = j.value("patience", c.patience);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.seed = j.value("seed", c.seed);
  c.min_rows = j.value("min_rows", c.min_rows);
  return c;
}

json TrainReport::to_json() const {
  json g = json::array();
  for (const auto& p : grid) {
    g.push_back({{"hidden", p.hidden},
                 {"l2", p.l2},
                 {"best_epoch", p.best_epoch},
                 {"epochs_run", p.epochs_run},
                 {"stopped_early", p.stopped_early},
                 {"validation_loss", p.validation_loss},
                 {"weight_norm", p.weight_norm}});
  }
  return {{"grid", g},
          {"selected", selected},
          {"train_rows", train_rows},
          {"validation_rows", validation_rows},
          {"validation_r2", validation_r2},
          {"config", config.to_json()}};
}

TrainReport TrainReport::from_json(const json& j) {
  TrainReport r;
  for (const auto& p : j.at("grid")) {
    r.grid.push_back({p.at("hidden").get<std::size_t>(), p.at("l2").get<double>(),
                      p.at("best_epoch").get<std::size_t>(), p.at("epochs_run").get<std::size_t>(),
                      p.at("stopped_early").get<bool>(), p.at("validation_loss").get<double>(),
                      p.at("weight_norm").get<double>()});
  }
  r.selected = j.at("selected").get<std::size_t>();
  r.train_rows = j.at("train_rows").get<std::size_t>();
  r.validation_rows = j.at("validation_rows").get<std::size_t>();
  r.validation_r2 = j.at("validation_r2").get<double>();
  r.config = TrainConfig::from_json(j.at("config"));
  return r;
}

MlpModel::MlpModel(std::string name, ScalerParams input_scaler, ScalerParams output_scaler, Network net)
    : name_(std::move(name)),
      input_scaler_(std::move(input_scaler)),
      output_scaler_(std::move(output_scaler)),
      net_(std::move(net)) {
  if (net_.inputs() != input_scaler_.size() || net_.outputs() != output_scaler_.size()) {
    throw StructuralError("network shape does not match scaler for model '" + name_ + "'");
  }
}

std::vector<double> MlpModel::predict(std::span<const double> x) const {
  if (x.size() != input_scaler_.size()) {
    throw ValidationError("model '" + name_ + "' expects " + std::to_string(input_scaler_.size()) +
                          " inputs, got " + std::to_string(x.size()));
  }
  Eigen::VectorXd s(static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) s[static_cast<Eigen::Index>(j)] = input_scaler_.scale(j, x[j]);
  const Eigen::MatrixXd out = net_.forward(s);
  std::vector<double> y(output_scaler_.size());
  for (std::size_t j = 0; j < y.size(); ++j) y[j] = output_scaler_.unscale(j, out(static_cast<Eigen::Index>(j), 0));
  return y;
}

Eigen::MatrixXd MlpModel::predict_batch(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != input_scaler_.size()) {
    throw ValidationError("model '" + name_ + "' expects " + std::to_string(input_scaler_.size()) +
                          " input columns, got " + std::to_string(x.cols()));
  }
  const Eigen::MatrixXd out = net_.forward(input_scaler_.scale(x).transpose());
  return output_scaler_.unscale(out.transpose());
}

namespace {

json columns_to_json(const std::vector<Column>& cols) {
  json a = json::array();
  for (const auto& c : cols) a.push_back({{"name", c.name}, {"unit", c.unit}});
  return a;
}

std::vector<Column> columns_from_json(const json& a) {
  std::vector<Column> cols;
  for (const auto& c : a) cols.push_back({c.at("name").get<std::string>(), c.at("unit").get<std::string>()});
  return cols;
}

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& a) {
  const auto v = a.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto row = rows[static_cast<std::size_t>(r)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) throw ValidationError("ragged weight matrix in model file");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

}  // namespace

json MlpModel::to_json() const {
  return {{"format", kModelFormat},
          {"tag", tag_},
          {"name", name_},
          {"inputs", columns_to_json(input_scaler_.columns)},
          {"outputs", columns_to_json(output_scaler_.columns)},
          {"scaler",
           {{"input_min", vector_to_json(input_scaler_.min)},
            {"input_max", vector_to_json(input_scaler_.max)},
            {"output_min", vector_to_json(output_scaler_.min)},
            {"output_max", vector_to_json(output_scaler_.max)}}},
          {"network",
           {{"hidden", net_.hidden()},
            {"activation", "relu"},
            {"hidden_weights", matrix_to_json(net_.hidden_weights)},
            {"hidden_bias", vector_to_json(net_.hidden_bias)},
            {"output_weights", matrix_to_json(net_.output_weights)},
            {"output_bias", vector_to_json(net_.output_bias)}}},
          {"dropped_features", dropped_features_},
          {"training", report_.to_json()}};
}

MlpModel MlpModel::from_json(const json& j) {
  if (j.value("format", std::string{}) != kModelFormat) {
    throw ValidationError("unsupported model format, expected " + std::string(kModelFormat));
  }
  const auto& s = j.at("scaler");
  ScalerParams in{columns_from_json(j.at("inputs")), vector_from_json(s.at("input_min")),
                  vector_from_json(s.at("input_max"))};
  ScalerParams out{columns_from_json(j.at("outputs")), vector_from_json(s.at("output_min")),
                   vector_from_json(s.at("output_max"))};
  const auto& n = j.at("network");
  Network net;
  net.hidden_weights = matrix_from_json(n.at("hidden_weights"), static_cast<Eigen::Index>(in.size()));
  net.hidden_bias = vector_from_json(n.at("hidden_bias"));
  net.output_weights = matrix_from_json(n.at("output_weights"), net.hidden_weights.rows());
  net.output_bias = vector_from_json(n.at("output_bias"));
  MlpModel m(j.at("name").get<std::string>(), std::move(in), std::move(out), std::move(net));
  m.tag_ = j.value("tag", std::string{"component"});
  m.dropped_features_ = j.value("dropped_features", std::vector<std::string>{});
  if (j.contains("training")) m.report_ = TrainReport::from_json(j.at("training"));
  return m;
}

namespace {

// Adam moment buffers for one parameter block.
struct Moments {
  Eigen::ArrayXXd m;
  Eigen::ArrayXXd v;

  template <typename Derived>
  explicit Moments(const Eigen::MatrixBase<Derived>& shape)
      : m(Eigen::ArrayXXd::Zero(shape.rows(), shape.cols())), v(Eigen::ArrayXXd::Zero(shape.rows(), shape.cols())) {}

  template <typename P, typename G>
  void step(Eigen::MatrixBase<P>& param, const Eigen::MatrixBase<G>& grad, double lr_t) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    m = beta1 * m + (1.0 - beta1) * grad.array();
    v = beta2 * v + (1.0 - beta2) * grad.array().square();
    param.array() -= lr_t * m / (v.sqrt() + eps);
  }
};

double mean_squared_error(const Network& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  return (net.forward(x) - y).squaredNorm() / static_cast<double>(y.size());
}

std::string grid_label(std::size_t hidden, double l2) {
  return "hidden=" + std::to_string(hidden) + ", l2=" + format_double(l2);
}

}  // namespace

FitResult fit_network(const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train, const Eigen::MatrixXd& x_val,
                      const Eigen::MatrixXd& y_val, std::size_t hidden, double l2, const TrainConfig& config) {
  const auto n = static_cast<std::size_t>(x_train.cols());
  const auto d = x_train.rows();
  const auto k = y_train.rows();
  // Initial weights depend on the width only, so grid points that differ in
  // l2 alone start from the same point.
  Network net = Network::random(static_cast<std::size_t>(d), hidden, static_cast<std::size_t>(k),
                                config.seed * 1000003ULL + hidden);
  Moments m_w1(net.hidden_weights), m_b1(net.hidden_bias), m_w2(net.output_weights), m_b2(net.output_bias);

  const std::size_t batch = (n + config.batch_divisor - 1) / config.batch_divisor;
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  FitResult result;
  result.summary.hidden = hidden;
  result.summary.l2 = l2;
  double best = std::numeric_limits<double>::infinity();
  Network best_net = net;
  std::size_t since_best = 0;
  std::uint64_t t = 0;
  Eigen::MatrixXd xb, yb;

  std::size_t epoch = 0;
  while (epoch < config.max_epochs) {
    ++epoch;
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t len = std::min(batch, n - start);
      xb.resize(d, static_cast<Eigen::Index>(len));
      yb.resize(k, static_cast<Eigen::Index>(len));
      for (std::size_t i = 0; i < len; ++i) {
        xb.col(static_cast<Eigen::Index>(i)) = x_train.col(static_cast<Eigen::Index>(order[start + i]));
        yb.col(static_cast<Eigen::Index>(i)) = y_train.col(static_cast<Eigen::Index>(order[start + i]));
      }
      const LossGradient lg = loss_and_gradient(net, xb, yb, l2);
      if (!std::isfinite(lg.loss)) {
        throw DivergenceError("non-finite training loss at grid point " + grid_label(hidden, l2) + ", epoch " +
                              std::to_string(epoch));
      }
      ++t;
      const double lr_t = config.learning_rate * std::sqrt(1.0 - std::pow(0.999, static_cast<double>(t))) /
                          (1.0 - std::pow(0.9, static_cast<double>(t)));
      m_w1.step(net.hidden_weights, lg.gradient.hidden_weights, lr_t);
      m_b1.step(net.hidden_bias, lg.gradient.hidden_bias, lr_t);
      m_w2.step(net.output_weights, lg.gradient.output_weights, lr_t);
      m_b2.step(net.output_bias, lg.gradient.output_bias, lr_t);
    }
    const double val = mean_squared_error(net, x_val, y_val);
    if (!std::isfinite(val)) {
      throw DivergenceError("non-finite validation loss at grid point " + grid_label(hidden, l2) + ", epoch " +
                            std::to_string(epoch));
    }
    if (val < best) {
      best = val;
      best_net = net;
      result.summary.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      result.summary.stopped_early = true;
      break;
    }
  }
  result.summary.epochs_run = epoch;
  result.summary.validation_loss = best;
  result.summary.weight_norm = std::sqrt(best_net.weight_norm_squared());
  result.net = std::move(best_net);
  return result;
}

MlpModel train_mlp(const Dataset& data, const TrainConfig& config, const std::string& name) {
  config.validate();
  const std::size_t n = data.rows();
  if (n < config.min_rows) {
    throw ValidationError("model '" + name + "' needs at least " + std::to_string(config.min_rows) + " rows, got " +
                          std::to_string(n));
  }
  ScalerParams in = fit_scaler(data.inputs, data.input_columns);
  ScalerParams out = fit_scaler(data.outputs, data.output_columns);

  Rng split_rng(config.seed);
  const auto perm = split_rng.permutation(n);
  std::size_t n_val = static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  std::vector<std::size_t> val_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_rows(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());

  const Dataset train = data.subset(train_rows);
  const Dataset val = data.subset(val_rows);
  const Eigen::MatrixXd x_train = in.scale(train.inputs).transpose();
  const Eigen::MatrixXd y_train = out.scale(train.outputs).transpose();
  const Eigen::MatrixXd x_val = in.scale(val.inputs).transpose();
  const Eigen::MatrixXd y_val = out.scale(val.outputs).transpose();

  std::vector<std::pair<std::size_t, double>> grid;
  for (auto h : config.hidden_widths) {
    for (auto a : config.l2_values) grid.emplace_back(h, a);
  }
  std::vector<FitResult> fits(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    fits[i] = fit_network(x_train, y_train, x_val, y_val, grid[i].first, grid[i].second, config);
  });

  TrainReport report;
  report.config = config;
  report.train_rows = train_rows.size();
  report.validation_rows = val_rows.size();
  for (std::size_t i = 0; i < fits.size(); ++i) {
    report.grid.push_back(fits[i].summary);
    if (fits[i].summary.validation_loss < fits[report.selected].summary.validation_loss) report.selected = i;
  }
  MlpModel model(name, std::move(in), std::move(out), std::move(fits[report.selected].net));

  const Eigen::MatrixXd pred = model.predict_batch(val.inputs);
  const Eigen::VectorXd truth = val.outputs.col(0);
  const double sse = (pred.col(0) - truth).squaredNorm();
  const double sst = (truth.array() - truth.mean()).square().sum();
  report.validation_r2 = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
  model.set_report(std::move(report));
  return model;
}

}  // namespace cbml
