#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "worcs/core.hpp"
#include "worcs/demand.hpp"
#include "worcs/metric_dataset.hpp"
#include "worcs/oracle.hpp"

namespace worcs {

using Pair = std::pair<Index, Index>;

enum class StrategyKind { WorcsI, WorcsIIRank, WorcsIIWeak, WorcsIIFullDist, GTS, FastGTS, Random, MinDist };

/// Canonical spelling used in configs, CSV and transcripts ("worcs2-weak", ...).
std::string to_string(StrategyKind kind);

/// Accepts the canonical spelling and the enum-style name ("WorcsIIWeak").
StrategyKind parse_strategy_kind(std::string_view name);

/// True for strategies whose pair choice consumes randomness.
bool is_randomized(StrategyKind kind);

struct Strategy {
  StrategyKind kind = StrategyKind::WorcsIIWeak;
  Index fast_gts_k = 10;
  std::uint64_t seed = 0;
};

/// Unordered pairs of point indices.
class PairSet {
 public:
  void insert(Index x, Index y) { set_.insert(key(x, y)); }
  bool contains(Index x, Index y) const { return !set_.empty() && set_.count(key(x, y)) != 0; }
  std::size_t size() const { return set_.size(); }
  void clear() { set_.clear(); }

 private:
  static std::uint64_t key(Index x, Index y) {
    if (x > y) std::swap(x, y);
    return (static_cast<std::uint64_t>(x) << 32) | static_cast<std::uint64_t>(y);
  }
  std::unordered_set<std::uint64_t> set_;
};

/// Candidate targets consistent with every answer so far.
class VersionSpace {
 public:
  VersionSpace(const DemandD& demand, Subset members);

  const Subset& members() const { return members_; }
  Index size() const { return members_.size(); }
  double mass() const { return mass_; }
  std::size_t generation() const { return generation_; }
  bool contains(Index i) const { return mask_[static_cast<std::size_t>(i)] != 0; }

  /// Replaces the members by `next` (a subset of the current members) and
  /// advances the generation. Returns the number of removed points.
  Index shrink_to(Subset next);

 private:
  const DemandD* demand_;
  Subset members_;
  std::vector<char> mask_;
  double mass_ = 0;
  std::size_t generation_ = 0;
};

/// Farthest-neighbour rankings (the F2 side information of the rank
/// strategy): per point, all others by decreasing distance, lower index
/// first on ties. Datasets in on-demand cache mode fall back to scanning
/// distances.
class RankTable {
 public:
  explicit RankTable(const Dataset& ds);

  /// Farthest member y ≠ x of `vs` with (x, y) not excluded.
  std::optional<Index> farthest(Index x, const VersionSpace& vs, const PairSet& excluded) const;

 private:
  const Dataset* ds_;
  std::vector<std::vector<Index>> ranking_;
};

// --- Pair selectors --------------------------------------------------------
//
// Each selector returns std::nullopt when no admissible pair is left.
// `excluded` holds pairs already found not to shrink the current version
// space.

std::optional<Pair> select_pair_rank(const RankTable& ranks, const VersionSpace& vs, Rng& rng,
                                     const PairSet& excluded = {});

struct WeakPick {
  Pair pair;
  bool fallback = false;  // no qualifying y: a random pair was used instead
};

/// Uses only triplet relations, never raw distances: picks x at random and
/// returns the first y (in seeded order) such that no z in the version space
/// has x ∈ Vor(y, z, V).
std::optional<WeakPick> select_pair_weak(const TripletRelation<double>& relation,
                                         const VersionSpace& vs, Rng& rng,
                                         const PairSet& excluded = {});

/// max(μ(x-answers), μ(y-answers), μ(?-answers)) over z in `vs`, each z
/// classified by the deterministic weak-oracle partition.
double gts_objective(const Dataset& ds, const DemandD& demand, double alpha, const Subset& vs,
                     Index x, Index y);

struct GtsPick {
  Pair pair;
  double objective = 0;
};

/// Exact GTS minimizer when `k` is empty, otherwise Fast-GTS over k sampled
/// distinct pairs. Ties go to the lexicographically smallest pair.
std::optional<GtsPick> select_pair_gts(const Dataset& ds, const DemandD& demand, double alpha,
                                       const VersionSpace& vs, std::optional<Index> k, Rng* rng,
                                       const PairSet& excluded = {});

std::optional<Pair> select_pair_random(const VersionSpace& vs, Rng& rng,
                                       const PairSet& excluded = {});
std::optional<Pair> select_pair_mindist(const Dataset& ds, const VersionSpace& vs,
                                        const PairSet& excluded = {});
std::optional<Pair> select_pair_fulldist(const Dataset& ds, const VersionSpace& vs,
                                         const PairSet& excluded = {});

/// Points eliminated by answer `a` to the query (x, y):
///   x → Vor(y, x, V);  y → Vor(x, y, V);  ? → Vor(x, y, V) ∪ Vor(y, x, V).
/// Points equidistant from x and y are never removed, which keeps exact ties
/// consistent with the α = 1 tie rule of the oracle.
Subset removal_set(const Dataset& ds, double alpha, Index x, Index y, Answer a, const Subset& vs);

// --- Engines ---------------------------------------------------------------

struct Step {
  Index x = 0;
  Index y = 0;
  Answer answer = Answer::Unsure;
  Index removed = 0;
  Index vs_size = 0;
  double vs_mass = 0;
  bool flagged = false;  // heuristic iteration or selector fallback
};

/// One completed version-space update.
struct IterationRecord {
  Index size_before = 0;
  Index size_after = 0;
  double mass_before = 0;
  double mass_after = 0;
  double diameter = 0;     // WORCS-I only
  Index cover_size = 0;    // WORCS-I only
  Index center = -1;       // WORCS-I only
  bool heuristic = false;  // WORCS-I: no center passed
};

enum class EngineStatus { Running, Found, FoundProbable, FailedNoProgress, Eliminated };

struct EngineResult {
  EngineStatus status = EngineStatus::Running;
  Index point = -1;
};

/// Step-driven search: ask pending() for the next query, feed the answer
/// back with answer(), repeat until done(). The same engine drives both
/// simulated oracles and human answers.
class SearchEngine {
 public:
  virtual ~SearchEngine() = default;

  std::optional<Pair> pending() const { return pending_; }
  bool done() const { return result_.status != EngineStatus::Running; }
  const EngineResult& result() const { return result_; }
  const VersionSpace& version_space() const { return vs_; }
  const std::vector<Step>& steps() const { return steps_; }
  const std::vector<IterationRecord>& iterations() const { return iterations_; }
  const std::vector<double>& decision_ms() const { return decision_ms_; }
  const Strategy& strategy() const { return strategy_; }
  double alpha() const { return alpha_; }

  /// Applies the answer to the pending query and prepares the next one.
  const Step& answer(Answer a);

 protected:
  SearchEngine(const Dataset& ds, const DemandD& demand, double alpha, Strategy strategy);

  /// Chooses the next non-terminal query (|V| ≥ 3) or finishes.
  virtual void prepare_query() = 0;
  virtual void apply_answer(Answer a, Step& step) = 0;

  void prepare();
  void finish(EngineStatus status, Index point);
  bool terminal_pending() const { return vs_.size() <= 2; }

  const Dataset& ds_;
  const DemandD& demand_;
  double alpha_;
  Strategy strategy_;
  Rng rng_;
  VersionSpace vs_;
  std::optional<Pair> pending_;
  EngineResult result_;
  std::vector<Step> steps_;
  std::vector<IterationRecord> iterations_;
  std::vector<double> decision_ms_;
  bool pending_flagged_ = false;

 private:
  void apply_terminal(Answer a, Step& step);
};

/// Builds the engine for `strategy`. `ranks` may be shared across runs on the
/// same dataset; when null the rank strategy builds its own table.
std::unique_ptr<SearchEngine> make_engine(const Dataset& ds, const DemandD& demand, double alpha,
                                          const Strategy& strategy,
                                          std::shared_ptr<const RankTable> ranks = nullptr);

// --- Simulated runs --------------------------------------------------------

enum class SearchStatus { FoundExact, FoundProbable, FailedTargetEliminated, FailedNoProgress };

std::string to_string(SearchStatus status);

struct SearchOutcome {
  SearchStatus status = SearchStatus::FailedNoProgress;
  Index returned = -1;
  std::size_t queries = 0;
  std::vector<Step> transcript;
  std::vector<IterationRecord> iterations;
  std::vector<double> decision_ms;
};

/// Runs `strategy` against a simulated oracle until the engine halts.
SearchOutcome run_search(const Dataset& ds, const DemandD& demand, OracleInstance<double>& oracle,
                         double alpha, const Strategy& strategy,
                         std::shared_ptr<const RankTable> ranks = nullptr);

SearchOutcome run_worcs1(const Dataset& ds, const DemandD& demand, OracleInstance<double>& oracle,
                         double alpha, std::uint64_t seed = 0);

SearchOutcome run_worcs2(const Dataset& ds, const DemandD& demand, OracleInstance<double>& oracle,
                         double alpha, const Strategy& pair_selector);

// --- Transcripts -----------------------------------------------------------

/// Everything needed to rebuild the run: dataset source, demand, strategy.
struct TranscriptMeta {
  std::string dataset;
  std::string metric = "euclidean";
  bool standardize = false;
  double demand_exponent = 0.4;
  std::uint64_t demand_seed = 0;
  std::string oracle = "weak-probabilistic";
  std::uint64_t oracle_seed = 0;
};

/// Oracle answers only: [{"x": id, "y": id, "answer": "x"|"y"|"?"}].
nlohmann::json oracle_transcript_json(const Dataset& ds, const std::vector<Step>& steps);

/// Full session transcript with strategy, status and per-step removals.
nlohmann::json transcript_to_json(const Dataset& ds, const SearchOutcome& outcome,
                                  const Strategy& strategy, double alpha, Index target,
                                  const TranscriptMeta& meta);

struct ReplayReport {
  bool ok = true;
  std::size_t failed_step = 0;  // 1-based; 0 when the failure is not step-specific
  std::string message;
};

/// Re-runs the recorded answers through a fresh engine and checks every
/// step's query pair, removal count and version-space size, and the final
/// status.
ReplayReport replay_transcript(const Dataset& ds, const DemandD& demand,
                               const nlohmann::json& transcript);

}  // namespace worcs
