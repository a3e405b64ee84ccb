#include "worcs/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "worcs/datasets.hpp"

namespace worcs {

namespace {

std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

Index sample_target(const DemandD& demand, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  double acc = 0;
  for (Index i = 0; i < demand.size(); ++i) {
    acc += demand(i);
    if (r < acc) return i;
  }
  const Subset support = demand.support();
  return support[support.size() - 1];
}

struct Cell {
  Dataset ds;
  DemandD demand;
  double alpha = 1;
  double exponent = 0;
  std::uint64_t demand_seed = 0;
  double sweep_value = 0;
};

struct TrialResult {
  std::size_t queries = 0;
  double decision_ms = 0;
  bool failed = false;
};

void run_cell(const ExperimentConfig& config, const Cell& cell,
              const std::vector<StrategyKind>& kinds, std::vector<ResultRow>& rows,
              const TranscriptSink& sink) {
  std::shared_ptr<const RankTable> ranks;
  if (std::find(kinds.begin(), kinds.end(), StrategyKind::WorcsIIRank) != kinds.end())
    ranks = std::make_shared<RankTable>(cell.ds);
  const OracleMode mode = parse_oracle_mode(config.oracle);
  const auto trials = static_cast<std::size_t>(config.trials);
  std::vector<std::vector<TrialResult>> results(kinds.size(), std::vector<TrialResult>(trials));

  auto run_trial = [&](std::size_t t) {
    const auto tt = static_cast<std::uint64_t>(t);
    const Index target = sample_target(cell.demand, derive_seed(config.master_seed, "target", tt));
    const OracleConfig oc{cell.alpha, mode, derive_seed(config.master_seed, "oracle", tt)};
    const std::uint64_t selector_seed = derive_seed(config.master_seed, "selector", tt);
    for (std::size_t s = 0; s < kinds.size(); ++s) {
      OracleInstance<double> oracle(cell.ds, oc, target);
      const Strategy strategy{kinds[s], config.fast_gts_k, selector_seed};
      const SearchOutcome out = run_search(cell.ds, cell.demand, oracle, cell.alpha, strategy, ranks);
      TrialResult& r = results[s][t];
      r.queries = out.queries;
      r.decision_ms = std::accumulate(out.decision_ms.begin(), out.decision_ms.end(), 0.0);
      // Coincident points cannot be told apart by any comparison; returning
      // one of them counts as locating the target.
      r.failed = out.returned < 0 || cell.ds(out.returned, target) > 0;
      if (sink) {
        TranscriptMeta meta{config.dataset, config.metric,  config.standardize, cell.exponent,
                            cell.demand_seed, config.oracle, oc.seed};
        sink(to_string(kinds[s]), cell.sweep_value, static_cast<Index>(t),
             transcript_to_json(cell.ds, out, strategy, cell.alpha, target, meta));
      }
    }
  };

  const unsigned threads = sink ? 1u : std::max(1u, config.threads);
  if (threads == 1) {
    for (std::size_t t = 0; t < trials; ++t) run_trial(t);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < trials; t += threads) run_trial(t);
      });
  }

  const std::string axis = config.sweep ? config.sweep->axis : "none";
  for (std::size_t s = 0; s < kinds.size(); ++s) {
    ResultRow row;
    row.strategy = to_string(kinds[s]);
    row.sweep_axis = axis;
    row.sweep_value = cell.sweep_value;
    row.trials = config.trials;
    row.seed = config.master_seed;
    double sum = 0, ms = 0;
    std::size_t failures = 0;
    for (const auto& r : results[s]) {
      row.queries.push_back(r.queries);
      sum += static_cast<double>(r.queries);
      ms += r.decision_ms;
      failures += r.failed ? 1 : 0;
    }
    const double n = static_cast<double>(trials);
    row.mean_queries = sum / n;
    double ss = 0;
    for (std::size_t q : row.queries) ss += std::pow(static_cast<double>(q) - row.mean_queries, 2);
    row.std_queries = trials > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    std::vector<std::size_t> sorted = row.queries;
    std::sort(sorted.begin(), sorted.end());
    row.median_queries = trials % 2 == 1
                             ? static_cast<double>(sorted[trials / 2])
                             : 0.5 * static_cast<double>(sorted[trials / 2 - 1] + sorted[trials / 2]);
    if (config.timing) row.mean_decision_ms = ms / n;
    row.failure_rate = static_cast<double>(failures) / n;
    rows.push_back(std::move(row));
  }
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.dataset = j.at("dataset").get<std::string>();
  c.metric = j.value("metric", c.metric);
  c.standardize = j.value("standardize", c.standardize);
  c.strategies = j.at("strategies").get<std::vector<std::string>>();
  c.alpha = j.value("alpha", c.alpha);
  c.demand_exponent = j.value("demand_exponent", c.demand_exponent);
  c.trials = j.value("trials", c.trials);
  c.master_seed = j.value("master_seed", c.master_seed);
  if (j.contains("sweep") && !j.at("sweep").is_null()) {
    const auto& s = j.at("sweep");
    c.sweep = SweepSpec{s.at("axis").get<std::string>(), s.at("values").get<std::vector<double>>()};
  }
  c.oracle = j.value("oracle", c.oracle);
  c.fast_gts_k = j.value("fast_gts_k", c.fast_gts_k);
  c.timing = j.value("timing", c.timing);
  c.threads = j.value("threads", c.threads);
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j = {{"dataset", c.dataset},
                      {"metric", c.metric},
                      {"standardize", c.standardize},
                      {"strategies", c.strategies},
                      {"alpha", c.alpha},
                      {"demand_exponent", c.demand_exponent},
                      {"trials", c.trials},
                      {"master_seed", c.master_seed},
                      {"oracle", c.oracle},
                      {"fast_gts_k", c.fast_gts_k},
                      {"timing", c.timing},
                      {"threads", c.threads}};
  j["sweep"] = c.sweep ? nlohmann::json{{"axis", c.sweep->axis}, {"values", c.sweep->values}}
                       : nlohmann::json();
  return j;
}

void validate(const ExperimentConfig& c) {
  if (c.dataset.empty()) throw std::invalid_argument("config needs a dataset");
  if (c.strategies.empty()) throw std::invalid_argument("config needs at least one strategy");
  for (const auto& s : c.strategies) parse_strategy_kind(s);
  parse_metric(c.metric);
  parse_oracle_mode(c.oracle);
  if (c.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (!(c.alpha >= 1.0)) throw std::invalid_argument("alpha must be >= 1");
  if (!(c.demand_exponent >= 0.0)) throw std::invalid_argument("demand_exponent must be >= 0");
  if (c.fast_gts_k < 1) throw std::invalid_argument("fast_gts_k must be >= 1");
  if (c.sweep) {
    const auto& axis = c.sweep->axis;
    if (axis != "N" && axis != "alpha" && axis != "exponent")
      throw std::invalid_argument("sweep axis must be N, alpha or exponent");
    if (c.sweep->values.empty()) throw std::invalid_argument("sweep needs values");
    for (double v : c.sweep->values) {
      if (axis == "exponent" ? !(v >= 0) : !(v > 0))
        throw std::invalid_argument("sweep values must be positive");
      if (axis == "alpha" && v < 1.0) throw std::invalid_argument("alpha values must be >= 1");
      if (axis == "N" && v != std::floor(v)) throw std::invalid_argument("N values must be integers");
    }
  }
}

const ResultRow& ExperimentResult::row(const std::string& strategy, double sweep_value) const {
  for (const auto& r : rows)
    if (r.strategy == strategy && r.sweep_value == sweep_value) return r;
  throw std::out_of_range("no result row for " + strategy);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const TranscriptSink& sink) {
  validate(config);
  std::vector<StrategyKind> kinds;
  for (const auto& s : config.strategies) kinds.push_back(parse_strategy_kind(s));
  const Dataset base =
      load_dataset({config.dataset, parse_metric(config.metric), config.standardize});

  ExperimentResult result;
  result.config = config;
  const std::vector<double> values =
      config.sweep ? config.sweep->values : std::vector<double>{0.0};
  const std::string axis = config.sweep ? config.sweep->axis : "none";

  for (double v : values) {
    Cell cell;
    cell.alpha = axis == "alpha" ? v : config.alpha;
    cell.exponent = axis == "exponent" ? v : config.demand_exponent;
    cell.sweep_value = v;
    if (axis == "N") {
      const auto n = static_cast<Index>(v);
      if (n > base.size())
        throw std::invalid_argument("sweep size " + std::to_string(n) + " exceeds dataset size " +
                                    std::to_string(base.size()));
      std::vector<Index> perm(static_cast<std::size_t>(base.size()));
      std::iota(perm.begin(), perm.end(), Index{0});
      Rng rng(derive_seed(config.master_seed, "subsample", static_cast<std::uint64_t>(n)));
      std::shuffle(perm.begin(), perm.end(), rng);
      perm.resize(static_cast<std::size_t>(n));
      cell.ds = base.restrict_to(Subset::from_indices(std::move(perm)));
      cell.demand_seed = derive_seed(config.master_seed, "demand", static_cast<std::uint64_t>(n));
    } else {
      cell.ds = base;
      cell.demand_seed = derive_seed(config.master_seed, "demand");
    }
    cell.demand = power_law_demand<double>(cell.ds.size(), cell.exponent, cell.demand_seed);
    run_cell(config, cell, kinds, result.rows, sink);
  }
  return result;
}

namespace {

ExperimentResult run_sweep(ExperimentConfig config, const char* axis) {
  if (!config.sweep) throw std::invalid_argument(std::string("sweep over ") + axis + " needs values");
  config.sweep->axis = axis;
  return run_experiment(config);
}

}  // namespace

ExperimentResult sweep_scalability(ExperimentConfig config) { return run_sweep(std::move(config), "N"); }
ExperimentResult sweep_alpha(ExperimentConfig config) { return run_sweep(std::move(config), "alpha"); }
ExperimentResult sweep_exponent(ExperimentConfig config) {
  return run_sweep(std::move(config), "exponent");
}

std::string result_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "strategy,sweep_axis,sweep_value,trials,mean_queries,std_queries,mean_decision_ms,"
         "failure_rate,seed\n";
  for (const auto& r : result.rows) {
    out << r.strategy << ',' << r.sweep_axis << ','
        << (r.sweep_axis == "none" ? std::string() : format_double("%g", r.sweep_value)) << ','
        << r.trials << ',' << format_double("%.6f", r.mean_queries) << ','
        << format_double("%.6f", r.std_queries) << ','
        << (r.mean_decision_ms ? format_double("%.6f", *r.mean_decision_ms) : std::string("NA"))
        << ',' << format_double("%.6f", r.failure_rate) << ',' << r.seed << '\n';
  }
  return out.str();
}

nlohmann::json result_sidecar(const ExperimentResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"strategy", r.strategy},
                    {"sweep_axis", r.sweep_axis},
                    {"sweep_value", r.sweep_value},
                    {"trials", r.trials},
                    {"mean_queries", r.mean_queries},
                    {"std_queries", r.std_queries},
                    {"median_queries", r.median_queries},
                    {"mean_decision_ms", r.mean_decision_ms ? nlohmann::json(*r.mean_decision_ms)
                                                            : nlohmann::json()},
                    {"failure_rate", r.failure_rate},
                    {"seed", r.seed}});
  }
  return {{"config", config_to_json(result.config)}, {"rows", rows}};
}

}  // namespace worcs
