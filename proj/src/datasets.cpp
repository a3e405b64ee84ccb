#include "worcs/datasets.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>
#include <random>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace worcs {

namespace {

std::string point_id(Index i) { return "p" + std::to_string(i); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("non-numeric value '" + cell + "' in column '" + column +
                              "' at data row " + std::to_string(row + 1));
}

}  // namespace

Dataset uniform_cube(Index dim, Index n, std::uint64_t seed) {
  if (dim < 1 || n < 1) throw std::invalid_argument("uniform-cube needs dim >= 1 and n >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset::FeatureMatrix f(n, dim);
  std::vector<std::string> ids;
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < dim; ++k) f(i, k) = u(rng);
    ids.push_back(point_id(i));
  }
  return Dataset::from_features(std::move(ids), std::move(f), Metric::Euclidean);
}

Dataset gaussian_mixture(Index k, Index dim, Index n, std::uint64_t seed) {
  if (k < 1 || dim < 1 || n < 1)
    throw std::invalid_argument("gaussian-mixture needs k, dim, n >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 0.05);
  Dataset::FeatureMatrix centers(k, dim);
  for (Index c = 0; c < k; ++c)
    for (Index j = 0; j < dim; ++j) centers(c, j) = u(rng);
  Dataset::FeatureMatrix f(n, dim);
  std::vector<std::string> ids;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < dim; ++j) f(i, j) = centers(i % k, j) + g(rng);
    ids.push_back(point_id(i));
  }
  return Dataset::from_features(std::move(ids), std::move(f), Metric::Euclidean);
}

Dataset line(Index n) {
  if (n < 1) throw std::invalid_argument("line needs n >= 1");
  std::vector<double> coords(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) coords[static_cast<std::size_t>(i)] = static_cast<double>(i);
  return Dataset::from_line(coords);
}

Dataset load_csv(std::istream& in, const CsvOptions& options) {
  std::string line_text;
  if (!std::getline(in, line_text)) throw std::invalid_argument("CSV is empty");
  const auto header = split_csv_line(line_text);
  std::ptrdiff_t id_col = -1, label_col = -1;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "id") id_col = static_cast<std::ptrdiff_t>(c);
    else if (header[c] == "label") label_col = static_cast<std::ptrdiff_t>(c);
    else feature_cols.push_back(c);
  }
  if (id_col < 0) throw std::invalid_argument("CSV header has no 'id' column");
  if (feature_cols.empty()) throw std::invalid_argument("CSV has no feature columns");

  std::vector<std::string> ids, labels;
  std::vector<double> values;
  while (std::getline(in, line_text)) {
    if (line_text.empty() || line_text == "\r") continue;
    const auto cells = split_csv_line(line_text);
    if (cells.size() != header.size())
      throw std::invalid_argument("CSV row " + std::to_string(ids.size() + 1) +
                                  " has the wrong number of columns");
    ids.push_back(cells[static_cast<std::size_t>(id_col)]);
    if (label_col >= 0) labels.push_back(cells[static_cast<std::size_t>(label_col)]);
    for (std::size_t c : feature_cols) values.push_back(parse_number(cells[c], ids.size() - 1, header[c]));
  }
  const auto n = static_cast<Index>(ids.size());
  const auto dim = static_cast<Index>(feature_cols.size());
  if (n == 0) throw std::invalid_argument("CSV has no data rows");
  Dataset::FeatureMatrix f = Eigen::Map<Dataset::FeatureMatrix>(values.data(), n, dim);
  if (options.standardize) {
    const Eigen::RowVectorXd mean = f.colwise().mean();
    f.rowwise() -= mean;
    Eigen::RowVectorXd sd = (f.array().square().colwise().sum() / static_cast<double>(n)).sqrt();
    for (Index j = 0; j < dim; ++j)
      if (sd(j) > 0) f.col(j) /= sd(j);
  }
  Dataset ds = Dataset::from_features(std::move(ids), std::move(f), options.metric);
  if (!labels.empty()) ds.set_labels(std::move(labels));
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file '" + path.string() + "'");
  return load_csv(in, options);
}

std::filesystem::path bundled_data_dir() {
#ifdef WORCS_BUNDLED_DATA_DIR
  return WORCS_BUNDLED_DATA_DIR;
#else
  return "data";
#endif
}

std::optional<std::filesystem::path> find_dataset_file(std::string_view name) {
  namespace fs = std::filesystem;
  const fs::path direct(name);
  if (fs::is_regular_file(direct)) return direct;
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("WORCS_DATA_DIR"); env && *env) dirs.emplace_back(env);
  dirs.push_back(bundled_data_dir());
  for (const auto& dir : dirs) {
    for (const auto& candidate : {dir / direct, dir / (std::string(name) + ".csv")})
      if (fs::is_regular_file(candidate)) return candidate;
  }
  return std::nullopt;
}

Dataset load_dataset(const DatasetSpec& spec) {
  static const std::regex generator(R"(^\s*([a-z-]+)\s*\(([^)]*)\)\s*$)");
  std::smatch m;
  if (std::regex_match(spec.source, m, generator)) {
    const std::string name = m[1];
    std::vector<long long> args;
    std::stringstream ss(m[2].str());
    for (std::string tok; std::getline(ss, tok, ',');) {
      try {
        args.push_back(std::stoll(tok));
      } catch (const std::exception&) {
        throw std::invalid_argument("bad generator argument '" + tok + "' in " + spec.source);
      }
    }
    auto need = [&](std::size_t count) {
      if (args.size() != count)
        throw std::invalid_argument(name + " expects " + std::to_string(count) + " arguments");
    };
    const auto seed = [&](std::size_t i) { return static_cast<std::uint64_t>(args[i]); };
    if (name == "uniform-cube") {
      need(3);
      return uniform_cube(args[0], args[1], seed(2));
    }
    if (name == "gaussian-mixture") {
      need(4);
      return gaussian_mixture(args[0], args[1], args[2], seed(3));
    }
    if (name == "line") {
      need(1);
      return line(args[0]);
    }
    throw std::invalid_argument("unknown generator '" + name + "'");
  }
  const auto path = find_dataset_file(spec.source);
  if (!path) throw std::runtime_error("dataset '" + spec.source + "' not found");
  return load_csv(*path, CsvOptions{spec.metric, spec.standardize});
}

}  // namespace worcs
