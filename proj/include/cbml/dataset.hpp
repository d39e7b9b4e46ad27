#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cbml {

// A named engineering quantity: column of a dataset or port of a model.
struct Column {
  std::string name;
  std::string unit;

  bool operator==(const Column&) const = default;
};

// Tabular supervised data in engineering units, one row per sample.
struct Dataset {
  std::vector<Column> input_columns;
  std::vector<Column> output_columns;
  Eigen::MatrixXd inputs;   // rows x inputs
  Eigen::MatrixXd outputs;  // rows x outputs
  std::vector<std::string> tags;  // provenance per row, e.g. "s12/wall.N"

  Dataset() = default;
  Dataset(std::vector<Column> in, std::vector<Column> out);

  std::size_t rows() const { return static_cast<std::size_t>(inputs.rows()); }
  bool empty() const { return rows() == 0; }
  void append(std::span<const double> x, std::span<const double> y, std::string tag = {});
  Dataset subset(std::span<const std::size_t> rows) const;
};

// Header: "tag,<input> [unit],...,target:<output> [unit],..."
std::string dataset_to_csv(const Dataset& d);
Dataset dataset_from_csv(const std::filesystem::path& path);

}  // namespace cbml
