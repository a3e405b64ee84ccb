#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "worcs/search.hpp"

namespace worcs {

struct SweepSpec {
  std::string axis;  // "N", "alpha" or "exponent"
  std::vector<double> values;
};

/// Experiment protocol. JSON field names match the member names.
struct ExperimentConfig {
  std::string dataset;  // bundled name, CSV path or generator expression
  std::string metric = "euclidean";
  bool standardize = false;
  std::vector<std::string> strategies;
  double alpha = 2.0;
  double demand_exponent = 0.4;
  Index trials = 100;
  std::uint64_t master_seed = 0;
  std::optional<SweepSpec> sweep;
  std::string oracle = "weak-probabilistic";
  Index fast_gts_k = 10;
  bool timing = false;  // wall-clock decision times make the CSV nondeterministic
  unsigned threads = 1;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Throws std::invalid_argument describing the first violated constraint.
void validate(const ExperimentConfig& config);

struct ResultRow {
  std::string strategy;
  std::string sweep_axis;  // "none" without a sweep
  double sweep_value = 0;
  Index trials = 0;
  double mean_queries = 0;
  double std_queries = 0;
  double median_queries = 0;
  std::optional<double> mean_decision_ms;
  double failure_rate = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> queries;  // per trial, in trial order
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ResultRow> rows;  // sweep values outer, strategies inner

  const ResultRow& row(const std::string& strategy, double sweep_value = 0) const;
};

/// Receives the full transcript of every run: (strategy, sweep value, trial, transcript).
using TranscriptSink =
    std::function<void(const std::string&, double, Index, const nlohmann::json&)>;

/// Runs every strategy on every trial (and sweep value). Each trial draws
/// its target from the demand and shares target and oracle seed across all
/// strategies; seeds derive from the master seed only, so results are
/// identical run to run and independent of the thread count.
ExperimentResult run_experiment(const ExperimentConfig& config, const TranscriptSink& sink = {});

/// run_experiment with the sweep axis forced to the named one.
ExperimentResult sweep_scalability(ExperimentConfig config);
ExperimentResult sweep_alpha(ExperimentConfig config);
ExperimentResult sweep_exponent(ExperimentConfig config);

/// Columns: strategy,sweep_axis,sweep_value,trials,mean_queries,std_queries,
/// mean_decision_ms,failure_rate,seed
std::string result_csv(const ExperimentResult& result);

/// Config echo plus per-row statistics, including medians.
nlohmann::json result_sidecar(const ExperimentResult& result);

}  // namespace worcs
