#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "worcs/metric_dataset.hpp"

namespace worcs {

/// Points drawn uniformly from the unit cube [0,1]^dim.
Dataset uniform_cube(Index dim, Index n, std::uint64_t seed);

/// k isotropic Gaussian clusters (σ = 0.05) with centers uniform in the unit
/// cube; points are assigned to clusters round-robin.
Dataset gaussian_mixture(Index k, Index dim, Index n, std::uint64_t seed);

/// n equispaced points 0, 1, ..., n-1 on the line.
Dataset line(Index n);

struct CsvOptions {
  Metric metric = Metric::Euclidean;
  bool standardize = false;  // z-score every feature column
};

/// CSV with a header row: column `id` (string), optional column `label`
/// (string), every other column numeric.
Dataset load_csv(std::istream& in, const CsvOptions& options = {});
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// How to obtain a dataset: a bundled name ("iris", "wine"), a CSV path, or
/// a generator expression such as `uniform-cube(2,100,7)`,
/// `gaussian-mixture(3,2,100,7)` or `line(32)`.
struct DatasetSpec {
  std::string source;
  Metric metric = Metric::Euclidean;
  bool standardize = false;
};

/// Resolves a dataset name or path. Bare names are searched in
/// $WORCS_DATA_DIR, then the bundled data directory.
std::optional<std::filesystem::path> find_dataset_file(std::string_view name);

Dataset load_dataset(const DatasetSpec& spec);

/// Directory holding the bundled CSV files.
std::filesystem::path bundled_data_dir();

}  // namespace worcs
