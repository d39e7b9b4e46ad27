#include "cbml/dataset.hpp"

#include "cbml/regressor.hpp"
#include "cbml/util.hpp"

namespace cbml {

Dataset::Dataset(std::vector<Column> in, std::vector<Column> out)
    : input_columns(std::move(in)),
      output_columns(std::move(out)),
      inputs(0, static_cast<Eigen::Index>(input_columns.size())),
      outputs(0, static_cast<Eigen::Index>(output_columns.size())) {}

void Dataset::append(std::span<const double> x, std::span<const double> y, std::string tag) {
  if (x.size() != input_columns.size() || y.size() != output_columns.size()) {
    throw ValidationError("dataset row has wrong width");
  }
  const auto r = inputs.rows();
  // conservativeResize per row is quadratic for huge tables; datasets here are
  // at most a few thousand rows.
  inputs.conservativeResize(r + 1, Eigen::NoChange);
  outputs.conservativeResize(r + 1, Eigen::NoChange);
  for (std::size_t j = 0; j < x.size(); ++j) inputs(r, static_cast<Eigen::Index>(j)) = x[j];
  for (std::size_t j = 0; j < y.size(); ++j) outputs(r, static_cast<Eigen::Index>(j)) = y[j];
  tags.push_back(std::move(tag));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset d(input_columns, output_columns);
  d.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  d.outputs.resize(static_cast<Eigen::Index>(rows.size()), outputs.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(rows[i]);
    d.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(src);
    d.outputs.row(static_cast<Eigen::Index>(i)) = outputs.row(src);
    d.tags.push_back(rows[i] < tags.size() ? tags[rows[i]] : std::string{});
  }
  return d;
}

namespace {

std::string header_cell(const Column& c) { return c.name + " [" + c.unit + "]"; }

Column parse_header_cell(const std::string& cell) {
  const auto open = cell.rfind(" [");
  if (open == std::string::npos || cell.back() != ']') {
    throw ValidationError("dataset header cell '" + cell + "' lacks a [unit]");
  }
  return {cell.substr(0, open), cell.substr(open + 2, cell.size() - open - 3)};
}

}  // namespace

std::string dataset_to_csv(const Dataset& d) {
  std::string out = "tag";
  for (const auto& c : d.input_columns) out += "," + header_cell(c);
  for (const auto& c : d.output_columns) out += ",target:" + header_cell(c);
  out += '\n';
  for (std::size_t r = 0; r < d.rows(); ++r) {
    out += r < d.tags.size() ? d.tags[r] : std::string{};
    const auto ri = static_cast<Eigen::Index>(r);
    for (Eigen::Index j = 0; j < d.inputs.cols(); ++j) out += "," + format_double(d.inputs(ri, j));
    for (Eigen::Index j = 0; j < d.outputs.cols(); ++j) out += "," + format_double(d.outputs(ri, j));
    out += '\n';
  }
  return out;
}

Dataset dataset_from_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw ValidationError("empty dataset file " + path.string());
  std::vector<Column> in, out;
  const auto& header = rows.front();
  for (std::size_t i = 1; i < header.size(); ++i) {
    const std::string prefix = "target:";
    if (header[i].rfind(prefix, 0) == 0) {
      out.push_back(parse_header_cell(header[i].substr(prefix.size())));
    } else {
      if (!out.empty()) throw ValidationError("dataset inputs must precede targets");
      in.push_back(parse_header_cell(header[i]));
    }
  }
  Dataset d(in, out);
  std::vector<double> x(in.size()), y(out.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) throw ValidationError("ragged dataset row " + std::to_string(r));
    for (std::size_t j = 0; j < in.size(); ++j) x[j] = parse_double(row[1 + j]);
    for (std::size_t j = 0; j < out.size(); ++j) y[j] = parse_double(row[1 + in.size() + j]);
    d.append(x, y, row[0]);
  }
  return d;
}


AffineModel::AffineModel(std::vector<Column> inputs, std::vector<Column> outputs,
                         std::vector<std::vector<double>> weights, std::vector<double> bias)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)), weights_(std::move(weights)), bias_(std::move(bias)) {
  if (weights_.size() != outputs_.size() || bias_.size() != outputs_.size()) {
    throw StructuralError("affine model needs one weight row and bias per output");
  }
  for (const auto& row : weights_) {
    if (row.size() != inputs_.size()) throw StructuralError("affine model weight row has wrong width");
  }
}

std::vector<double> AffineModel::predict(std::span<const double> x) const {
  if (x.size() != inputs_.size()) {
    throw ValidationError("affine model expects " + std::to_string(inputs_.size()) + " inputs, got " +
                          std::to_string(x.size()));
  }
  std::vector<double> y(bias_);
  for (std::size_t k = 0; k < y.size(); ++k) {
    for (std::size_t j = 0; j < x.size(); ++j) y[k] += weights_[k][j] * x[j];
  }
  return y;
}

}  // namespace cbml
