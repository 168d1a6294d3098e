#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rotbart/model.hpp"
#include "rotbart/tree.hpp"

namespace rotbart {

// Raw-unit data. `names` has one entry per covariate followed by the response.
struct Dataset {
  Matrix x;
  std::vector<double> y;
  std::optional<std::vector<double>> truth;
  std::vector<std::string> names;

  std::size_t n() const { return x.rows; }
  std::size_t d() const { return x.cols; }
};

double friedman(std::span<const double> x);

Dataset gen_friedman(std::size_t n, double sigma2, std::uint64_t seed, std::size_t d_total = 10);
// n = 300, three covariates with x1 and x3 in opposite bands. `noise_var`
// is the variance of the additive noise.
Dataset gen_wu_synthetic(std::uint64_t seed, double noise_var = 0.25);
double wu_truth(std::span<const double> x);

// Errors carry the 1-based line and column of the offending cell.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, std::size_t line, std::size_t column);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Header plus numeric rows, no interpretation of the columns.
struct CsvTable {
  std::vector<std::string> names;
  Matrix values;
  std::optional<std::size_t> column(std::string_view name) const;
};
CsvTable parse_table(const std::string& text);
CsvTable load_table(const std::string& path);

// Header required. A column named `truth` holds noiseless values; of the rest
// the last is the response.
Dataset load_csv(const std::string& path);
Dataset parse_csv(const std::string& text);
void write_csv(const Dataset& data, const std::string& path);
std::string to_csv(const Dataset& data);

// Covariates min-max to [0,1], response to [-0.5, 0.5]. Constant columns map
// to 0.5 and are listed in `constant_columns`.
ScaledData scale_dataset(const Dataset& data, std::vector<std::size_t>* constant_columns = nullptr);
// Applies a fitted scaling to new covariate rows.
Matrix scale_points(const ScaledData& scaling, const Matrix& raw);

}  // namespace rotbart
