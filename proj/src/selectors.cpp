#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "worcs/search.hpp"

namespace worcs {

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::WorcsI: return "worcs1";
    case StrategyKind::WorcsIIRank: return "worcs2-rank";
    case StrategyKind::WorcsIIWeak: return "worcs2-weak";
    case StrategyKind::WorcsIIFullDist: return "worcs2-fulldist";
    case StrategyKind::GTS: return "gts";
    case StrategyKind::FastGTS: return "fast-gts";
    case StrategyKind::Random: return "random";
    case StrategyKind::MinDist: return "mindist";
  }
  return "unknown";
}

StrategyKind parse_strategy_kind(std::string_view name) {
  static const std::pair<std::string_view, StrategyKind> aliases[] = {
      {"WorcsI", StrategyKind::WorcsI},
      {"WorcsIIRank", StrategyKind::WorcsIIRank},
      {"WorcsIIWeak", StrategyKind::WorcsIIWeak},
      {"WorcsIIFullDist", StrategyKind::WorcsIIFullDist},
      {"GTS", StrategyKind::GTS},
      {"FastGTS", StrategyKind::FastGTS},
      {"Random", StrategyKind::Random},
      {"MinDist", StrategyKind::MinDist},
  };
  for (auto kind : {StrategyKind::WorcsI, StrategyKind::WorcsIIRank, StrategyKind::WorcsIIWeak,
                    StrategyKind::WorcsIIFullDist, StrategyKind::GTS, StrategyKind::FastGTS,
                    StrategyKind::Random, StrategyKind::MinDist})
    if (name == to_string(kind)) return kind;
  for (const auto& [alias, kind] : aliases)
    if (name == alias) return kind;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

bool is_randomized(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::WorcsIIRank:
    case StrategyKind::WorcsIIWeak:
    case StrategyKind::FastGTS:
    case StrategyKind::Random: return true;
    default: return false;
  }
}

VersionSpace::VersionSpace(const DemandD& demand, Subset members)
    : demand_(&demand), members_(std::move(members)),
      mask_(static_cast<std::size_t>(demand.size()), 0) {
  members_.check_within(demand.size());
  for (Index i : members_) mask_[static_cast<std::size_t>(i)] = 1;
  mass_ = demand.mass(members_);
}

Index VersionSpace::shrink_to(Subset next) {
  if (!next.is_subset_of(members_)) throw std::logic_error("version space can only shrink");
  const Index removed = members_.size() - next.size();
  for (Index i : members_) mask_[static_cast<std::size_t>(i)] = 0;
  members_ = std::move(next);
  for (Index i : members_) mask_[static_cast<std::size_t>(i)] = 1;
  mass_ = demand_->mass(members_);
  ++generation_;
  return removed;
}

RankTable::RankTable(const Dataset& ds) : ds_(&ds) {
  if (ds.cache_mode() != CacheMode::FullMatrix) return;
  const Index n = ds.size();
  ranking_.resize(static_cast<std::size_t>(n));
  for (Index x = 0; x < n; ++x) {
    auto& r = ranking_[static_cast<std::size_t>(x)];
    r.reserve(static_cast<std::size_t>(n - 1));
    for (Index y = 0; y < n; ++y)
      if (y != x) r.push_back(y);
    std::sort(r.begin(), r.end(), [&](Index a, Index b) {
      const double da = ds(x, a), db = ds(x, b);
      return da > db || (da == db && a < b);
    });
  }
}

std::optional<Index> RankTable::farthest(Index x, const VersionSpace& vs,
                                         const PairSet& excluded) const {
  if (!ranking_.empty()) {
    for (Index y : ranking_[static_cast<std::size_t>(x)])
      if (vs.contains(y) && !excluded.contains(x, y)) return y;
    return std::nullopt;
  }
  std::optional<Index> best;
  double best_d = -1;
  for (Index y : vs.members()) {
    if (y == x || excluded.contains(x, y)) continue;
    const double d = (*ds_)(x, y);
    if (d > best_d) {
      best_d = d;
      best = y;
    }
  }
  return best;
}

namespace {

/// Draws members of `vs` uniformly without replacement, lazily.
class MemberSampler {
 public:
  explicit MemberSampler(const VersionSpace& vs) : pool_(vs.members().begin(), vs.members().end()) {}

  std::optional<Index> next(Rng& rng) {
    if (drawn_ >= pool_.size()) return std::nullopt;
    const auto pick = drawn_ + static_cast<std::size_t>(
                                   uniform_index(rng, static_cast<Index>(pool_.size() - drawn_)));
    std::swap(pool_[drawn_], pool_[pick]);
    return pool_[drawn_++];
  }

 private:
  std::vector<Index> pool_;
  std::size_t drawn_ = 0;
};

Pair ordered(Index a, Index b) { return a < b ? Pair{a, b} : Pair{b, a}; }

std::vector<Pair> admissible_pairs(const VersionSpace& vs, const PairSet& excluded) {
  std::vector<Pair> out;
  const auto& m = vs.members();
  for (Index a = 0; a < m.size(); ++a)
    for (Index b = a + 1; b < m.size(); ++b)
      if (!excluded.contains(m[a], m[b])) out.emplace_back(m[a], m[b]);
  return out;
}

}  // namespace

std::optional<Pair> select_pair_rank(const RankTable& ranks, const VersionSpace& vs, Rng& rng,
                                     const PairSet& excluded) {
  if (vs.size() < 2) throw std::invalid_argument("pair selection needs |V| >= 2");
  MemberSampler sampler(vs);
  while (auto x = sampler.next(rng)) {
    if (auto y = ranks.farthest(*x, vs, excluded)) return Pair{*x, *y};
  }
  return std::nullopt;
}

std::optional<WeakPick> select_pair_weak(const TripletRelation<double>& relation,
                                         const VersionSpace& vs, Rng& rng,
                                         const PairSet& excluded) {
  if (vs.size() < 2) throw std::invalid_argument("pair selection needs |V| >= 2");
  const auto& members = vs.members();
  const Index x = members[uniform_index(rng, members.size())];
  std::vector<Index> candidates;
  for (Index y : members)
    if (y != x) candidates.push_back(y);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  for (Index y : candidates) {
    if (excluded.contains(x, y)) continue;
    bool qualifies = true;
    for (Index z : members) {
      if (z == x || z == y) continue;
      if (relation(x, y, z) == Relation::BCloser) {
        qualifies = false;
        break;
      }
    }
    if (qualifies) return WeakPick{{x, y}, false};
  }
  if (auto p = select_pair_random(vs, rng, excluded)) return WeakPick{*p, true};
  return std::nullopt;
}

double gts_objective(const Dataset& ds, const DemandD& demand, double alpha, const Subset& vs,
                     Index x, Index y) {
  double mx = 0, my = 0, mu = 0;
  for (Index z : vs) {
    const double dx = ds(x, z), dy = ds(y, z);
    if (alpha * dx <= dy) mx += demand(z);
    else if (alpha * dy <= dx) my += demand(z);
    else mu += demand(z);
  }
  return std::max({mx, my, mu});
}

std::optional<GtsPick> select_pair_gts(const Dataset& ds, const DemandD& demand, double alpha,
                                       const VersionSpace& vs, std::optional<Index> k, Rng* rng,
                                       const PairSet& excluded) {
  if (vs.size() < 2) throw std::invalid_argument("pair selection needs |V| >= 2");
  if (k && *k < 1) throw std::invalid_argument("Fast-GTS needs k >= 1");
  std::vector<Pair> pairs;
  if (!k) {
    pairs = admissible_pairs(vs, excluded);
  } else {
    if (rng == nullptr) throw std::invalid_argument("Fast-GTS needs a random source");
    const Index m = vs.size();
    const Index total = m * (m - 1) / 2 - static_cast<Index>(excluded.size());
    if (2 * *k >= total) {
      pairs = admissible_pairs(vs, excluded);
      std::shuffle(pairs.begin(), pairs.end(), *rng);
      if (static_cast<Index>(pairs.size()) > *k) pairs.resize(static_cast<std::size_t>(*k));
    } else {
      PairSet seen;
      const auto& members = vs.members();
      while (static_cast<Index>(pairs.size()) < *k) {
        const Index a = uniform_index(*rng, m);
        Index b = uniform_index(*rng, m - 1);
        if (b >= a) ++b;
        const Pair p = ordered(members[a], members[b]);
        if (excluded.contains(p.first, p.second) || seen.contains(p.first, p.second)) continue;
        seen.insert(p.first, p.second);
        pairs.push_back(p);
      }
    }
  }
  std::optional<GtsPick> best;
  for (const Pair& p : pairs) {
    const double obj = gts_objective(ds, demand, alpha, vs.members(), p.first, p.second);
    if (!best || obj < best->objective || (obj == best->objective && p < best->pair))
      best = GtsPick{p, obj};
  }
  return best;
}

std::optional<Pair> select_pair_random(const VersionSpace& vs, Rng& rng, const PairSet& excluded) {
  if (vs.size() < 2) throw std::invalid_argument("pair selection needs |V| >= 2");
  const auto& members = vs.members();
  const Index m = vs.size();
  for (int attempt = 0; attempt < 64; ++attempt) {
    const Index a = uniform_index(rng, m);
    Index b = uniform_index(rng, m - 1);
    if (b >= a) ++b;
    const Pair p = ordered(members[a], members[b]);
    if (!excluded.contains(p.first, p.second)) return p;
  }
  const auto pairs = admissible_pairs(vs, excluded);
  if (pairs.empty()) return std::nullopt;
  return pairs[static_cast<std::size_t>(uniform_index(rng, static_cast<Index>(pairs.size())))];
}

namespace {

template <typename Better>
std::optional<Pair> extreme_pair(const Dataset& ds, const VersionSpace& vs, const PairSet& excluded,
                                 Better better) {
  if (vs.size() < 2) throw std::invalid_argument("pair selection needs |V| >= 2");
  const auto& m = vs.members();
  std::optional<Pair> best;
  double best_d = 0;
  for (Index a = 0; a < m.size(); ++a)
    for (Index b = a + 1; b < m.size(); ++b) {
      if (excluded.contains(m[a], m[b])) continue;
      const double d = ds(m[a], m[b]);
      if (!best || better(d, best_d)) {
        best = Pair{m[a], m[b]};
        best_d = d;
      }
    }
  return best;
}

}  // namespace

std::optional<Pair> select_pair_mindist(const Dataset& ds, const VersionSpace& vs,
                                        const PairSet& excluded) {
  return extreme_pair(ds, vs, excluded, [](double d, double best) { return d < best; });
}

std::optional<Pair> select_pair_fulldist(const Dataset& ds, const VersionSpace& vs,
                                         const PairSet& excluded) {
  return extreme_pair(ds, vs, excluded, [](double d, double best) { return d > best; });
}

Subset removal_set(const Dataset& ds, double alpha, Index x, Index y, Answer a, const Subset& vs) {
  std::vector<Index> out;
  for (Index v : vs) {
    const double dx = ds(x, v), dy = ds(y, v);
    if (dx == dy) continue;
    const bool in_x_cell = alpha * dx <= dy;  // v ∈ Vor(x, y, V)
    const bool in_y_cell = alpha * dy <= dx;  // v ∈ Vor(y, x, V)
    const bool remove = (a == Answer::CloserX && in_y_cell) || (a == Answer::CloserY && in_x_cell) ||
                        (a == Answer::Unsure && (in_x_cell || in_y_cell));
    if (remove) out.push_back(v);
  }
  return Subset::from_sorted(std::move(out));
}

}  // namespace worcs
