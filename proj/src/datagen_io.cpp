#include "rotbart/datagen_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rotbart/rng.hpp"

namespace rotbart {

double friedman(std::span<const double> x) {
  return 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) +
         10.0 * x[3] + 5.0 * x[4];
}

Dataset gen_friedman(std::size_t n, double sigma2, std::uint64_t seed, std::size_t d_total) {
  if (n < 1) throw std::invalid_argument("gen_friedman: n must be at least 1");
  if (sigma2 < 0) throw std::invalid_argument("gen_friedman: sigma2 must be nonnegative");
  if (d_total < 5) throw std::invalid_argument("gen_friedman: d_total must be at least 5");
  Rng rng(seed);
  Dataset ds;
  ds.x = Matrix(n, d_total);
  // covariates first so the truth does not depend on the noise level
  for (auto& v : ds.x.data) v = rng.uniform();
  ds.truth.emplace(n);
  ds.y.resize(n);
  const double sd = std::sqrt(sigma2);
  for (std::size_t i = 0; i < n; ++i) {
    (*ds.truth)[i] = friedman(ds.x.row(i));
    ds.y[i] = (*ds.truth)[i] + (sd > 0 ? rng.normal(0.0, sd) : 0.0);
  }
  for (std::size_t j = 0; j < d_total; ++j) ds.names.push_back("x" + std::to_string(j + 1));
  ds.names.push_back("y");
  return ds;
}

double wu_truth(std::span<const double> x) {
  if (x[0] > 0.5) return 5.0;
  return x[1] <= 0.5 ? 1.0 : 3.0;
}

Dataset gen_wu_synthetic(std::uint64_t seed, double noise_var) {
  if (noise_var < 0) throw std::invalid_argument("gen_wu_synthetic: noise variance must be nonnegative");
  constexpr std::size_t n = 300;
  Rng rng(seed);
  auto unif = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  Dataset ds;
  ds.x = Matrix(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const bool first = i < 200;
    ds.x(i, 0) = first ? unif(0.1, 0.4) : unif(0.6, 0.9);
    ds.x(i, 1) = i < 100 ? unif(0.1, 0.4) : (first ? unif(0.6, 0.9) : unif(0.1, 0.9));
    ds.x(i, 2) = first ? unif(0.6, 0.9) : unif(0.1, 0.4);
  }
  ds.truth.emplace(n);
  ds.y.resize(n);
  const double sd = std::sqrt(noise_var);
  for (std::size_t i = 0; i < n; ++i) {
    (*ds.truth)[i] = wu_truth(ds.x.row(i));
    ds.y[i] = (*ds.truth)[i] + (sd > 0 ? rng.normal(0.0, sd) : 0.0);
  }
  ds.names = {"x1", "x2", "x3", "y"};
  return ds;
}

CsvError::CsvError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error("line " + std::to_string(line) +
                         (column ? ", column " + std::to_string(column) : std::string()) + ": " +
                         what),
      line_(line),
      column_(column) {}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t line, std::size_t col) {
  const std::string s = trim(raw);
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s[0] == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw CsvError("non-numeric cell '" + s + "'", line, col);
  return v;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

CsvTable parse_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  CsvTable table;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      table.names = split_fields(line);
      break;
    }
  }
  if (table.names.empty()) throw CsvError("missing header", lineno ? lineno : 1, 0);
  for (std::size_t j = 0; j < table.names.size(); ++j) {
    auto& name = table.names[j];
    name = trim(name);
    if (name.empty()) throw CsvError("empty column name", lineno, j + 1);
    double dummy;
    auto [p, ec] = std::from_chars(name.data(), name.data() + name.size(), dummy);
    if (ec == std::errc() && p == name.data() + name.size())
      throw CsvError("missing header (first row is numeric)", lineno, j + 1);
  }
  const std::size_t cols = table.names.size();
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != cols)
      throw CsvError("expected " + std::to_string(cols) + " fields, found " +
                         std::to_string(fields.size()),
                     lineno, 0);
    for (std::size_t j = 0; j < cols; ++j) values.push_back(parse_cell(fields[j], lineno, j + 1));
    ++rows;
  }
  if (rows == 0) throw CsvError("no data rows", lineno, 0);
  table.values = Matrix(rows, cols);
  table.values.data = std::move(values);
  return table;
}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return j;
  return std::nullopt;
}

Dataset parse_csv(const std::string& text) {
  const CsvTable table = parse_table(text);
  const std::size_t cols = table.names.size();
  const auto truth_col = table.column("truth");
  const std::size_t value_cols = cols - (truth_col ? 1 : 0);
  if (value_cols < 2) throw CsvError("need at least one covariate and a response", 1, 0);
  std::size_t response_col = cols - 1;
  if (truth_col && *truth_col == response_col) --response_col;

  Dataset ds;
  std::vector<std::size_t> x_cols;
  for (std::size_t j = 0; j < cols; ++j)
    if (j != response_col && (!truth_col || j != *truth_col)) {
      x_cols.push_back(j);
      ds.names.push_back(table.names[j]);
    }
  ds.names.push_back(table.names[response_col]);
  const std::size_t n = table.values.rows;
  ds.x = Matrix(n, x_cols.size());
  ds.y.resize(n);
  if (truth_col) ds.truth.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < x_cols.size(); ++k) ds.x(i, k) = table.values(i, x_cols[k]);
    ds.y[i] = table.values(i, response_col);
    if (truth_col) (*ds.truth)[i] = table.values(i, *truth_col);
  }
  return ds;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

CsvTable load_table(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_table(text);
  } catch (const CsvError& e) {
    throw CsvError(path + ": " + e.what(), e.line(), e.column());
  }
}

Dataset load_csv(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_csv(text);
  } catch (const CsvError& e) {
    throw CsvError(path + ": " + e.what(), e.line(), e.column());
  }
}

std::string to_csv(const Dataset& data) {
  if (data.names.size() != data.d() + 1 || data.y.size() != data.n() ||
      (data.truth && data.truth->size() != data.n()))
    throw std::invalid_argument("write_csv: inconsistent dataset dimensions");
  std::string out;
  for (std::size_t j = 0; j < data.names.size(); ++j) {
    if (j) out += ',';
    out += data.names[j];
  }
  if (data.truth) out += ",truth";
  out += '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.d(); ++j) {
      out += format_double(data.x(i, j));
      out += ',';
    }
    out += format_double(data.y[i]);
    if (data.truth) {
      out += ',';
      out += format_double((*data.truth)[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset& data, const std::string& path) {
  const std::string text = to_csv(data);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

ScaledData scale_dataset(const Dataset& data, std::vector<std::size_t>* constant_columns) {
  ScaledData s;
  const std::size_t n = data.n(), d = data.d();
  s.x = Matrix(n, d);
  s.x_min.assign(d, 0.0);
  s.x_max.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, data.x(i, j));
      hi = std::max(hi, data.x(i, j));
    }
    s.x_min[j] = lo;
    s.x_max[j] = hi;
    if (hi <= lo && constant_columns) constant_columns->push_back(j);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) s.x(i, j) = s.scale_x(j, data.x(i, j));
  double lo = INFINITY, hi = -INFINITY;
  for (double v : data.y) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) hi = lo + 1.0;  // constant response: keep the map invertible
  s.y_min = lo;
  s.y_max = hi;
  s.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.y[i] = s.scale_y(data.y[i]);
  return s;
}

Matrix scale_points(const ScaledData& scaling, const Matrix& raw) {
  if (raw.cols != scaling.d())
    throw std::invalid_argument("points have " + std::to_string(raw.cols) + " columns, fit has " +
                                std::to_string(scaling.d()));
  Matrix out(raw.rows, raw.cols);
  for (std::size_t i = 0; i < raw.rows; ++i)
    for (std::size_t j = 0; j < raw.cols; ++j) out(i, j) = scaling.scale_x(j, raw(i, j));
  return out;
}

}  // namespace rotbart
