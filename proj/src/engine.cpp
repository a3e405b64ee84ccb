#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "worcs/geometry.hpp"
#include "worcs/search.hpp"

namespace worcs {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

SearchEngine::SearchEngine(const Dataset& ds, const DemandD& demand, double alpha, Strategy strategy)
    : ds_(ds), demand_(demand), alpha_(alpha), strategy_(strategy), rng_(strategy.seed),
      vs_(demand, Subset::all(ds.size())) {
  if (demand.size() != ds.size()) throw std::invalid_argument("demand size mismatch");
  if (!(alpha >= 1.0)) throw std::invalid_argument("alpha must be >= 1");
}

void SearchEngine::finish(EngineStatus status, Index point) {
  result_ = {status, point};
  pending_.reset();
}

void SearchEngine::prepare() {
  const auto start = Clock::now();
  pending_flagged_ = false;
  if (vs_.size() == 1) {
    finish(EngineStatus::Found, vs_.members()[0]);
  } else if (vs_.size() == 2) {
    pending_ = Pair{vs_.members()[0], vs_.members()[1]};
  } else {
    prepare_query();
  }
  if (pending_) decision_ms_.push_back(elapsed_ms(start));
}

const Step& SearchEngine::answer(Answer a) {
  if (!pending_) throw std::logic_error("no pending query");
  const auto start = Clock::now();
  Step step;
  step.x = pending_->first;
  step.y = pending_->second;
  step.answer = a;
  step.flagged = pending_flagged_;
  if (terminal_pending()) {
    apply_terminal(a, step);
  } else {
    apply_answer(a, step);
  }
  step.vs_size = vs_.size();
  step.vs_mass = vs_.mass();
  steps_.push_back(step);
  // The update cost is attributed to the decision that follows it.
  const double update_ms = elapsed_ms(start);
  if (!done()) {
    prepare();
    if (pending_ && !decision_ms_.empty()) decision_ms_.back() += update_ms;
  }
  return steps_.back();
}

void SearchEngine::apply_terminal(Answer a, Step& step) {
  const Index x = step.x, y = step.y;
  if (a == Answer::Unsure) {
    // Abstention on the last pair: return the likelier point.
    finish(EngineStatus::FoundProbable, demand_(y) > demand_(x) ? y : x);
    return;
  }
  const Index keep = (a == Answer::CloserX) ? x : y;
  IterationRecord rec{vs_.size(), 1, vs_.mass(), demand_(keep)};
  step.removed = vs_.shrink_to(Subset::from_sorted({keep}));
  iterations_.push_back(rec);
  finish(EngineStatus::Found, keep);
}

namespace {

/// Version-space engine driven by a pair selector (WORCS-II and baselines).
class PairSelectionEngine final : public SearchEngine {
 public:
  PairSelectionEngine(const Dataset& ds, const DemandD& demand, double alpha,
                      const Strategy& strategy, std::shared_ptr<const RankTable> ranks)
      : SearchEngine(ds, demand, alpha, strategy), ranks_(std::move(ranks)),
        relation_(ds, alpha) {
    if (strategy.kind == StrategyKind::WorcsIIRank && !ranks_)
      ranks_ = std::make_shared<RankTable>(ds);
    if (strategy.kind == StrategyKind::FastGTS && strategy.fast_gts_k < 1)
      throw std::invalid_argument("Fast-GTS needs k >= 1");
    prepare();
  }

 protected:
  void prepare_query() override {
    auto pick = select();
    if (!pick) {
      finish(EngineStatus::FailedNoProgress, demand_.argmax(vs_.members()));
      return;
    }
    pending_ = pick;
  }

  void apply_answer(Answer a, Step& step) override {
    const Subset removed = removal_set(ds_, alpha_, step.x, step.y, a, vs_.members());
    if (removed.empty()) {
      excluded_.insert(step.x, step.y);
      ++reselections_;
      const Index m = vs_.size();
      if (static_cast<Index>(excluded_.size()) >= m * (m - 1) / 2 ||
          (is_randomized(strategy_.kind) && reselections_ >= 10 * m))
        finish(EngineStatus::FailedNoProgress, demand_.argmax(vs_.members()));
      return;
    }
    if (removed.size() == vs_.size()) {
      // Only possible when the answers contradict every remaining candidate.
      finish(EngineStatus::Eliminated, demand_.argmax(vs_.members()));
      return;
    }
    std::vector<Index> next;
    std::set_difference(vs_.members().begin(), vs_.members().end(), removed.begin(), removed.end(),
                        std::back_inserter(next));
    IterationRecord rec{vs_.size(), static_cast<Index>(next.size()), vs_.mass(), 0};
    step.removed = vs_.shrink_to(Subset::from_sorted(std::move(next)));
    rec.mass_after = vs_.mass();
    iterations_.push_back(rec);
    excluded_.clear();
    reselections_ = 0;
  }

 private:
  std::optional<Pair> select() {
    switch (strategy_.kind) {
      case StrategyKind::WorcsIIRank: return select_pair_rank(*ranks_, vs_, rng_, excluded_);
      case StrategyKind::WorcsIIWeak: {
        auto pick = select_pair_weak(relation_, vs_, rng_, excluded_);
        if (!pick) return std::nullopt;
        pending_flagged_ = pick->fallback;
        return pick->pair;
      }
      case StrategyKind::WorcsIIFullDist: return select_pair_fulldist(ds_, vs_, excluded_);
      case StrategyKind::GTS: {
        auto pick = select_pair_gts(ds_, demand_, alpha_, vs_, std::nullopt, nullptr, excluded_);
        if (!pick) return std::nullopt;
        return pick->pair;
      }
      case StrategyKind::FastGTS: {
        auto pick =
            select_pair_gts(ds_, demand_, alpha_, vs_, strategy_.fast_gts_k, &rng_, excluded_);
        if (!pick) return std::nullopt;
        return pick->pair;
      }
      case StrategyKind::Random: return select_pair_random(vs_, rng_, excluded_);
      case StrategyKind::MinDist: return select_pair_mindist(ds_, vs_, excluded_);
      case StrategyKind::WorcsI: break;
    }
    throw std::logic_error("strategy has no pair selector");
  }

  std::shared_ptr<const RankTable> ranks_;
  TripletRelation<double> relation_;
  PairSet excluded_;
  Index reselections_ = 0;
};

/// WORCS-I: cover the version space with a Δ/(8(α+1))-net; a center that
/// wins against every center farther than Δ/8 keeps only its
/// Δ(α+2)/(8(α+1))-ball. Queries are issued one at a time, and a center is
/// abandoned at its first lost comparison.
class CoverEngine final : public SearchEngine {
 public:
  CoverEngine(const Dataset& ds, const DemandD& demand, double alpha, const Strategy& strategy)
      : SearchEngine(ds, demand, alpha, strategy) {
    prepare();
  }

 protected:
  void prepare_query() override {
    if (centers_.empty()) start_iteration();
    advance();
  }

  void apply_answer(Answer a, Step& step) override {
    const Index c = centers_[center_pos_];
    if (a == Answer::CloserX) {
      ++wins_[center_pos_];
      ++opponent_pos_;
    } else {
      next_center();
    }
    if (pass_pending_ || center_pos_ >= centers_.size()) {
      const bool heuristic = center_pos_ >= centers_.size();
      const Index chosen = heuristic ? heuristic_center() : c;
      step.removed = shrink_around(chosen, heuristic);
      step.flagged = step.flagged || heuristic;
    }
  }

 private:
  void start_iteration() {
    const auto [pair, diam] = diameter_pair(ds_, vs_.members());
    (void)pair;
    diameter_ = diam;
    const double eps = diam / (8.0 * (alpha_ + 1.0));
    const Subset net = epsilon_net(ds_, vs_.members(), eps,
                                   derive_seed(strategy_.seed, "net", vs_.generation()));
    std::vector<std::pair<double, Index>> keyed;
    for (Index c : net) keyed.emplace_back(demand_.mass(ball(ds_, c, eps, vs_.members())), c);
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    centers_.clear();
    for (const auto& [m, c] : keyed) centers_.push_back(c);
    wins_.assign(centers_.size(), 0);
    center_pos_ = 0;
    load_opponents();
  }

  void load_opponents() {
    opponents_.clear();
    opponent_pos_ = 0;
    pass_pending_ = false;
    if (center_pos_ >= centers_.size()) return;
    const Index c = centers_[center_pos_];
    for (Index other : centers_)
      if (other != c && ds_(c, other) > diameter_ / 8.0) opponents_.push_back(other);
    std::sort(opponents_.begin(), opponents_.end());
  }

  void next_center() {
    ++center_pos_;
    load_opponents();
  }

  /// Sets the next query, or shrinks immediately when a center passes with
  /// no comparison left to make.
  void advance() {
    while (!done()) {
      if (opponent_pos_ < opponents_.size()) {
        pending_ = Pair{centers_[center_pos_], opponents_[opponent_pos_]};
        pass_pending_ = opponent_pos_ + 1 == opponents_.size();
        return;
      }
      if (shrink_around(centers_[center_pos_], false) == 0) return;
      if (vs_.size() <= 2) {
        if (vs_.size() == 1) finish(EngineStatus::Found, vs_.members()[0]);
        else pending_ = Pair{vs_.members()[0], vs_.members()[1]};
        return;
      }
      start_iteration();
    }
  }

  Index heuristic_center() const {
    const double radius = next_radius();
    std::size_t best = 0;
    double best_mass = -1;
    for (std::size_t k = 0; k < centers_.size(); ++k) {
      const double m = demand_.mass(ball(ds_, centers_[k], radius, vs_.members()));
      if (wins_[k] > wins_[best] ||
          (wins_[k] == wins_[best] &&
           (m > best_mass || (m == best_mass && centers_[k] < centers_[best])))) {
        best = k;
        best_mass = m;
      }
    }
    return centers_[best];
  }

  double next_radius() const { return diameter_ * (alpha_ + 2.0) / (8.0 * (alpha_ + 1.0)); }

  /// V ← B_center(Δ(α+2)/(8(α+1))) ∩ V. Returns the number removed; zero
  /// removal ends the search as FailedNoProgress.
  Index shrink_around(Index center, bool heuristic) {
    Subset next = ball(ds_, center, next_radius(), vs_.members());
    IterationRecord rec;
    rec.size_before = vs_.size();
    rec.mass_before = vs_.mass();
    rec.diameter = diameter_;
    rec.cover_size = static_cast<Index>(centers_.size());
    rec.center = center;
    rec.heuristic = heuristic;
    if (next.size() == vs_.size()) {
      finish(EngineStatus::FailedNoProgress, demand_.argmax(vs_.members()));
      return 0;
    }
    const Index removed = vs_.shrink_to(std::move(next));
    rec.size_after = vs_.size();
    rec.mass_after = vs_.mass();
    iterations_.push_back(rec);
    centers_.clear();
    opponents_.clear();
    return removed;
  }

  double diameter_ = 0;
  std::vector<Index> centers_;
  std::vector<int> wins_;
  std::size_t center_pos_ = 0;
  std::vector<Index> opponents_;
  std::size_t opponent_pos_ = 0;
  bool pass_pending_ = false;
};

}  // namespace

std::unique_ptr<SearchEngine> make_engine(const Dataset& ds, const DemandD& demand, double alpha,
                                          const Strategy& strategy,
                                          std::shared_ptr<const RankTable> ranks) {
  if (strategy.kind == StrategyKind::WorcsI)
    return std::make_unique<CoverEngine>(ds, demand, alpha, strategy);
  return std::make_unique<PairSelectionEngine>(ds, demand, alpha, strategy, std::move(ranks));
}

std::string to_string(SearchStatus status) {
  switch (status) {
    case SearchStatus::FoundExact: return "FoundExact";
    case SearchStatus::FoundProbable: return "FoundProbable";
    case SearchStatus::FailedTargetEliminated: return "FailedTargetEliminated";
    case SearchStatus::FailedNoProgress: return "FailedNoProgress";
  }
  return "unknown";
}

namespace {

SearchStatus classify(const EngineResult& r, Index target) {
  switch (r.status) {
    case EngineStatus::Found:
      return r.point == target ? SearchStatus::FoundExact : SearchStatus::FailedTargetEliminated;
    case EngineStatus::FoundProbable: return SearchStatus::FoundProbable;
    case EngineStatus::Eliminated: return SearchStatus::FailedTargetEliminated;
    case EngineStatus::FailedNoProgress:
    case EngineStatus::Running: break;
  }
  return SearchStatus::FailedNoProgress;
}

}  // namespace

SearchOutcome run_search(const Dataset& ds, const DemandD& demand, OracleInstance<double>& oracle,
                         double alpha, const Strategy& strategy,
                         std::shared_ptr<const RankTable> ranks) {
  if (oracle.config().mode != OracleMode::Strong && oracle.alpha() != alpha)
    throw std::invalid_argument("oracle alpha differs from the search alpha");
  auto engine = make_engine(ds, demand, alpha, strategy, std::move(ranks));
  while (auto q = engine->pending()) engine->answer(oracle.answer(q->first, q->second));
  SearchOutcome out;
  out.status = classify(engine->result(), oracle.target());
  out.returned = engine->result().point;
  out.transcript = engine->steps();
  out.queries = out.transcript.size();
  out.iterations = engine->iterations();
  out.decision_ms = engine->decision_ms();
  return out;
}

SearchOutcome run_worcs1(const Dataset& ds, const DemandD& demand, OracleInstance<double>& oracle,
                         double alpha, std::uint64_t seed) {
  return run_search(ds, demand, oracle, alpha, Strategy{StrategyKind::WorcsI, 10, seed});
}

SearchOutcome run_worcs2(const Dataset& ds, const DemandD& demand, OracleInstance<double>& oracle,
                         double alpha, const Strategy& pair_selector) {
  if (pair_selector.kind == StrategyKind::WorcsI)
    throw std::invalid_argument("WORCS-I is not a pair selector");
  return run_search(ds, demand, oracle, alpha, pair_selector);
}

nlohmann::json oracle_transcript_json(const Dataset& ds, const std::vector<Step>& steps) {
  nlohmann::json out = nlohmann::json::array();
  for (const Step& s : steps)
    out.push_back({{"x", ds.id(s.x)}, {"y", ds.id(s.y)}, {"answer", std::string(to_string(s.answer))}});
  return out;
}

nlohmann::json transcript_to_json(const Dataset& ds, const SearchOutcome& outcome,
                                  const Strategy& strategy, double alpha, Index target,
                                  const TranscriptMeta& meta) {
  nlohmann::json steps = nlohmann::json::array();
  for (const Step& s : outcome.transcript)
    steps.push_back({{"x", ds.id(s.x)},
                     {"y", ds.id(s.y)},
                     {"answer", std::string(to_string(s.answer))},
                     {"removed", s.removed},
                     {"vs_size", s.vs_size}});
  return {{"strategy", to_string(strategy.kind)},
          {"fast_gts_k", strategy.fast_gts_k},
          {"alpha", alpha},
          {"seed", strategy.seed},
          {"target_id", ds.id(target)},
          {"returned_id", outcome.returned >= 0 ? nlohmann::json(ds.id(outcome.returned)) : nlohmann::json()},
          {"status", to_string(outcome.status)},
          {"queries", outcome.queries},
          {"dataset", meta.dataset},
          {"metric", meta.metric},
          {"standardize", meta.standardize},
          {"demand_exponent", meta.demand_exponent},
          {"demand_seed", meta.demand_seed},
          {"oracle", meta.oracle},
          {"oracle_seed", meta.oracle_seed},
          {"steps", steps}};
}

ReplayReport replay_transcript(const Dataset& ds, const DemandD& demand,
                               const nlohmann::json& transcript) {
  auto fail = [](std::size_t step, std::string msg) { return ReplayReport{false, step, std::move(msg)}; };
  Strategy strategy;
  strategy.kind = parse_strategy_kind(transcript.at("strategy").get<std::string>());
  strategy.seed = transcript.at("seed").get<std::uint64_t>();
  strategy.fast_gts_k = transcript.value("fast_gts_k", Index{10});
  const double alpha = transcript.at("alpha").get<double>();
  const Index target = ds.index_of(transcript.at("target_id").get<std::string>());
  const auto& steps = transcript.at("steps");
  if (transcript.at("queries").get<std::size_t>() != steps.size())
    return fail(0, "query count " + transcript.at("queries").dump() + " differs from " +
                       std::to_string(steps.size()) + " recorded steps");

  auto engine = make_engine(ds, demand, alpha, strategy);
  std::size_t k = 0;
  for (const auto& rec : steps) {
    ++k;
    const auto q = engine->pending();
    if (!q) return fail(k, "engine halted before this step");
    const Index x = ds.index_of(rec.at("x").get<std::string>());
    const Index y = ds.index_of(rec.at("y").get<std::string>());
    if (q->first != x || q->second != y)
      return fail(k, "engine queried (" + ds.id(q->first) + ", " + ds.id(q->second) +
                         ") but the transcript records (" + ds.id(x) + ", " + ds.id(y) + ")");
    const Step& s = engine->answer(parse_answer(rec.at("answer").get<std::string>()));
    if (s.removed != rec.at("removed").get<Index>())
      return fail(k, "removed " + std::to_string(s.removed) + " points but the transcript records " +
                         rec.at("removed").dump());
    if (s.vs_size != rec.at("vs_size").get<Index>())
      return fail(k, "version space has " + std::to_string(s.vs_size) +
                         " points but the transcript records " + rec.at("vs_size").dump());
  }
  if (engine->pending()) return fail(0, "transcript ends while the engine still has a pending query");
  const auto status = to_string(classify(engine->result(), target));
  if (status != transcript.at("status").get<std::string>())
    return fail(0, "final status " + status + " differs from recorded " + transcript.at("status").dump());
  return {};
}

}  // namespace worcs
