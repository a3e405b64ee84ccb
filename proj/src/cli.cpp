#include "worcs/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "worcs/datasets.hpp"
#include "worcs/doubling.hpp"
#include "worcs/geometry.hpp"
#include "worcs/harness.hpp"
#include "worcs/service.hpp"

namespace worcs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Reported as exit code 2 with the message.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentFlags {
  std::string config;
  std::string dataset;
  std::vector<std::string> strategies;
  std::string metric;
  bool standardize = false;
  double alpha = 0;
  double demand_exponent = -1;
  Index trials = 0;
  std::string oracle;
  std::uint64_t seed = 0;
  std::vector<double> values;
  std::string out = "results.csv";
  std::string transcript_dir;
  unsigned threads = 0;
  bool force = false;
  bool timing = false;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f, bool sweep) {
  cmd->add_option("--config", f.config, "experiment config JSON");
  cmd->add_option("--dataset", f.dataset, "dataset name, CSV path or generator (overrides config)");
  cmd->add_option("--strategies", f.strategies, "strategies (overrides config)")->delimiter(',');
  cmd->add_option("--metric", f.metric, "euclidean, manhattan or cosine-distance");
  cmd->add_flag("--standardize", f.standardize, "z-score CSV feature columns");
  cmd->add_option("--alpha", f.alpha, "oracle uncertainty factor alpha >= 1");
  cmd->add_option("--demand-exponent", f.demand_exponent, "power-law demand exponent");
  cmd->add_option("--trials", f.trials, "trials per grid cell");
  cmd->add_option("--oracle", f.oracle, "strong, weak-deterministic or weak-probabilistic");
  cmd->add_option("--seed", f.seed, "master seed (default 0)");
  if (sweep) cmd->add_option("--values", f.values, "sweep values (overrides config)")->delimiter(',');
  cmd->add_option("--out", f.out, "CSV output path; the JSON sidecar goes next to it")
      ->capture_default_str();
  cmd->add_option("--transcript-dir", f.transcript_dir, "write one transcript JSON per run");
  cmd->add_option("--threads", f.threads, "worker threads for trials");
  cmd->add_flag("--force", f.force, "overwrite existing outputs");
  cmd->add_flag("--timing", f.timing, "record wall-clock decision times (nondeterministic)");
}

ExperimentConfig build_config(const CLI::App& cmd, const ExperimentFlags& f, const char* axis) {
  ExperimentConfig c;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw UsageError("cannot read config " + f.config);
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw UsageError("config " + f.config + " is not valid JSON");
    try {
      c = config_from_json(j);
    } catch (const json::exception& e) {
      throw UsageError("config " + f.config + ": " + e.what());
    }
  } else if (f.dataset.empty()) {
    throw UsageError("either --config or --dataset is required");
  }
  if (!f.dataset.empty()) c.dataset = f.dataset;
  if (!f.strategies.empty()) c.strategies = f.strategies;
  if (!f.metric.empty()) c.metric = f.metric;
  if (f.standardize) c.standardize = true;
  if (cmd.count("--alpha")) c.alpha = f.alpha;
  if (cmd.count("--demand-exponent")) c.demand_exponent = f.demand_exponent;
  if (cmd.count("--trials")) c.trials = f.trials;
  if (!f.oracle.empty()) c.oracle = f.oracle;
  if (cmd.count("--seed")) c.master_seed = f.seed;
  if (cmd.count("--threads")) c.threads = f.threads;
  if (f.timing) c.timing = true;
  if (axis != nullptr) {
    if (!c.sweep) c.sweep = SweepSpec{};
    c.sweep->axis = axis;
    if (!f.values.empty()) c.sweep->values = f.values;
  }
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

void write_file(const fs::path& path, const std::string& content, bool force) {
  if (fs::exists(path) && !force)
    throw UsageError("refusing to overwrite " + path.string() + " (use --force)");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

int run_experiment_command(const CLI::App& cmd, const ExperimentFlags& f, const char* axis,
                           std::ostream& out) {
  const ExperimentConfig config = build_config(cmd, f, axis);
  const fs::path csv_path(f.out);
  fs::path sidecar_path = csv_path;
  sidecar_path.replace_extension(".json");
  if (!f.force)
    for (const auto& p : {csv_path, sidecar_path})
      if (fs::exists(p)) throw UsageError("refusing to overwrite " + p.string() + " (use --force)");

  TranscriptSink sink;
  if (!f.transcript_dir.empty()) {
    if (config.sweep && config.sweep->axis == "N")
      throw UsageError("--transcript-dir is not supported for N sweeps (runs use subsamples)");
    const fs::path dir(f.transcript_dir);
    sink = [dir, force = f.force](const std::string& strategy, double value, Index trial,
                                  const json& transcript) {
      std::ostringstream name;
      name << strategy;
      if (value != 0) name << '-' << value;
      name << '-' << trial << ".json";
      write_file(dir / name.str(), transcript.dump(2) + "\n", force);
    };
  }
  const ExperimentResult result = run_experiment(config, sink);
  write_file(csv_path, result_csv(result), f.force);
  write_file(sidecar_path, result_sidecar(result).dump(2) + "\n", f.force);
  out << "wrote " << csv_path.string() << " and " << sidecar_path.string() << " ("
      << result.rows.size() << " rows)\n";
  return kExitOk;
}

Dataset load_flag_dataset(const std::string& source, const std::string& metric, bool standardize) {
  return load_dataset({source, metric.empty() ? Metric::Euclidean : parse_metric(metric), standardize});
}

json report_json(const Dataset& ds, const DoublingReport<double>& r) {
  json subset = json::array();
  for (Index i : r.witness.subset) subset.push_back(ds.id(i));
  return {{"constant", r.constant},
          {"exact", r.exact},
          {"witness",
           {{"center", ds.id(r.witness.center)},
            {"radius", r.witness.radius},
            {"subset", r.witness.subset.empty() ? json("all") : subset}}}};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Comparison-based search with a weak oracle", "worcs"};
  app.require_subcommand(1);

  ExperimentFlags bench_f, sweep_n_f, sweep_alpha_f, sweep_exp_f;
  auto* bench = app.add_subcommand("bench", "run strategies on a dataset and write results");
  add_experiment_flags(bench, bench_f, false);
  auto* sweep_n = app.add_subcommand("sweep-n", "sweep over dataset size");
  add_experiment_flags(sweep_n, sweep_n_f, true);
  auto* sweep_alpha = app.add_subcommand("sweep-alpha", "sweep over alpha");
  add_experiment_flags(sweep_alpha, sweep_alpha_f, true);
  auto* sweep_exp = app.add_subcommand("sweep-exponent", "sweep over the demand exponent");
  add_experiment_flags(sweep_exp, sweep_exp_f, true);

  std::string net_dataset, net_metric;
  double net_eps = 0;
  std::uint64_t net_seed = 0;
  bool net_standardize = false;
  auto* net = app.add_subcommand("net", "greedy epsilon-net of a dataset");
  net->add_option("--dataset", net_dataset, "dataset name, CSV path or generator")->required();
  net->add_option("--eps", net_eps, "net radius")->required();
  net->add_option("--seed", net_seed, "scan-order seed (default 0)");
  net->add_option("--metric", net_metric, "euclidean, manhattan or cosine-distance");
  net->add_flag("--standardize", net_standardize, "z-score CSV feature columns");

  std::string dbl_dataset, dbl_metric;
  double dbl_exponent = 0.4;
  std::uint64_t dbl_seed = 0;
  bool dbl_strong = false, dbl_standardize = false;
  Index dbl_max_exact = kMaxExactStrongDoubling, dbl_samples = 256;
  auto* doubling = app.add_subcommand("doubling", "doubling constant of a dataset under power-law demand");
  doubling->add_option("--dataset", dbl_dataset, "dataset name, CSV path or generator")->required();
  doubling->add_option("--demand-exponent", dbl_exponent, "power-law demand exponent")
      ->capture_default_str();
  doubling->add_option("--seed", dbl_seed, "master seed for demand and sampling (default 0)");
  doubling->add_flag("--strong", dbl_strong, "also compute the strong doubling constant");
  doubling->add_option("--max-exact", dbl_max_exact, "largest n for exact strong enumeration")
      ->capture_default_str();
  doubling->add_option("--samples", dbl_samples, "subsets sampled for the strong lower bound")
      ->capture_default_str();
  doubling->add_option("--metric", dbl_metric, "euclidean, manhattan or cosine-distance");
  doubling->add_flag("--standardize", dbl_standardize, "z-score CSV feature columns");

  int port = 8080;
  std::string data_dir = "worcs-data", host = "127.0.0.1", ui_dir;
  auto* serve = app.add_subcommand("serve", "run the interactive session API");
  serve->add_option("--port", port, "TCP port")->capture_default_str();
  serve->add_option("--data-dir", data_dir, "session storage directory")->capture_default_str();
  serve->add_option("--host", host, "bind address")->capture_default_str();
  serve->add_option("--ui-dir", ui_dir, "static web UI served under /ui");

  std::string transcript_path;
  auto* replay = app.add_subcommand("replay", "verify a transcript against the engine");
  replay->add_option("--transcript", transcript_path, "transcript JSON")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  auto usage = [&](const CLI::App* cmd, const std::string& msg) {
    err << "error: " << msg << "\n\n" << cmd->help();
    return kExitUsage;
  };

  const CLI::App* active = app.get_subcommands().front();
  try {
    if (bench->parsed()) return run_experiment_command(*bench, bench_f, nullptr, out);
    if (sweep_n->parsed()) return run_experiment_command(*sweep_n, sweep_n_f, "N", out);
    if (sweep_alpha->parsed()) return run_experiment_command(*sweep_alpha, sweep_alpha_f, "alpha", out);
    if (sweep_exp->parsed()) return run_experiment_command(*sweep_exp, sweep_exp_f, "exponent", out);

    if (net->parsed()) {
      const Dataset ds = load_flag_dataset(net_dataset, net_metric, net_standardize);
      const Subset all = Subset::all(ds.size());
      const Subset centers = epsilon_net(ds, all, net_eps, net_seed);
      double min_pair = std::numeric_limits<double>::infinity();
      for (Index a = 0; a < centers.size(); ++a)
        for (Index b = a + 1; b < centers.size(); ++b)
          min_pair = std::min(min_pair, ds(centers[a], centers[b]));
      const bool cover = is_cover(ds, all, centers, net_eps);
      const bool packing = centers.size() < 2 || min_pair > net_eps;
      json ids = json::array();
      for (Index c : centers) ids.push_back(ds.id(c));
      out << json{{"eps", net_eps},
                  {"size", centers.size()},
                  {"ids", ids},
                  {"min_pairwise_distance", centers.size() < 2 ? json() : json(min_pair)},
                  {"is_cover", cover}}
                 .dump(2)
          << '\n';
      return cover && packing ? kExitOk : kExitVerificationFailed;
    }

    if (doubling->parsed()) {
      const Dataset ds = load_flag_dataset(dbl_dataset, dbl_metric, dbl_standardize);
      const auto demand =
          power_law_demand<double>(ds.size(), dbl_exponent, derive_seed(dbl_seed, "demand"));
      json report = {{"n", ds.size()},
                     {"demand_exponent", dbl_exponent},
                     {"doubling", report_json(ds, doubling_constant(ds, demand))}};
      if (dbl_strong) {
        const bool exact = ds.size() <= std::min(dbl_max_exact, kMaxExactStrongDoubling);
        const auto mode = exact ? StrongDoublingMode::exhaustive()
                                : StrongDoublingMode::sampled(dbl_samples, derive_seed(dbl_seed, "strong"));
        report["strong"] = report_json(ds, strong_doubling_constant(ds, demand, mode));
      }
      out << report.dump(2) << '\n';
      return kExitOk;
    }

    if (serve->parsed()) {
      SessionService service(data_dir, default_registry());
      if (service.restored() > 0) out << "restored " << service.restored() << " sessions\n";
      return run_server(service, host, port,
                        ui_dir.empty() ? std::nullopt : std::optional<fs::path>(ui_dir));
    }

    if (replay->parsed()) {
      std::ifstream in(transcript_path);
      if (!in) throw UsageError("cannot read transcript " + transcript_path);
      const json t = json::parse(in, nullptr, false);
      if (t.is_discarded()) throw UsageError("transcript " + transcript_path + " is not valid JSON");
      ReplayReport report;
      try {
        const Dataset ds = load_dataset({t.at("dataset").get<std::string>(),
                                         parse_metric(t.value("metric", std::string("euclidean"))),
                                         t.value("standardize", false)});
        const auto demand = power_law_demand<double>(ds.size(), t.at("demand_exponent").get<double>(),
                                                     t.at("demand_seed").get<std::uint64_t>());
        report = replay_transcript(ds, demand, t);
      } catch (const json::exception& e) {
        throw UsageError("malformed transcript: " + std::string(e.what()));
      } catch (const std::out_of_range& e) {
        report = {false, 0, e.what()};
      }
      if (report.ok) {
        out << "OK (" << t.at("steps").size() << " steps)\n";
        return kExitOk;
      }
      out << "FAIL";
      if (report.failed_step > 0) out << " at step " << report.failed_step;
      out << ": " << report.message << '\n';
      return kExitVerificationFailed;
    }
  } catch (const UsageError& e) {
    return usage(active, e.what());
  } catch (const std::invalid_argument& e) {
    return usage(active, e.what());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace worcs
