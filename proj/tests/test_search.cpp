#include <doctest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "worcs/doubling.hpp"
#include "worcs/geometry.hpp"
#include "worcs/search.hpp"

using namespace worcs;
using namespace worcs::testing;

namespace {

std::vector<Index> members(const Subset& s) { return {s.begin(), s.end()}; }

const StrategyKind kAllKinds[] = {StrategyKind::WorcsI,     StrategyKind::WorcsIIRank,
                                  StrategyKind::WorcsIIWeak, StrategyKind::WorcsIIFullDist,
                                  StrategyKind::GTS,         StrategyKind::FastGTS,
                                  StrategyKind::Random,      StrategyKind::MinDist};

SearchOutcome simulate(const Dataset& ds, const DemandD& mu, StrategyKind kind, double alpha, Index target,
                       OracleMode mode = OracleMode::WeakDeterministic, std::uint64_t seed = 0) {
  OracleInstance<double> oracle(ds, {alpha, mode, seed}, target);
  return run_search(ds, mu, oracle, alpha, Strategy{kind, 10, seed});
}

}  // namespace

TEST_CASE("strategy names round trip") {
  for (StrategyKind k : kAllKinds) CHECK(parse_strategy_kind(to_string(k)) == k);
  CHECK(parse_strategy_kind("WorcsIIWeak") == StrategyKind::WorcsIIWeak);
  CHECK_THROWS(parse_strategy_kind("bogus"));
}

TEST_CASE("version space bookkeeping") {
  const DemandD mu = power_law_demand(6, 1.0, 1);
  VersionSpace vs(mu, Subset::all(6));
  CHECK(vs.mass() == doctest::Approx(1.0));
  CHECK(vs.generation() == 0);
  CHECK(vs.shrink_to(Subset::from_indices({1, 4})) == 4);
  CHECK(vs.generation() == 1);
  CHECK(vs.mass() == doctest::Approx(mu(1) + mu(4)).epsilon(1e-12));
  CHECK(vs.contains(4));
  CHECK_FALSE(vs.contains(0));
  CHECK_THROWS(vs.shrink_to(Subset::from_indices({0})));
}

TEST_CASE("selectors on a two-point version space return the unique pair") {
  const Dataset ds = line_of({0, 1, 10});
  const DemandD mu = DemandD::uniform(3);
  const VersionSpace vs(mu, Subset::from_indices({0, 2}));
  Rng rng(3);
  const RankTable ranks(ds);
  const TripletRelation<double> rel(ds, 2.0);
  auto unordered = [](Pair p) { return p.first < p.second ? p : Pair{p.second, p.first}; };
  const Pair expect{0, 2};
  CHECK(unordered(*select_pair_rank(ranks, vs, rng)) == expect);
  CHECK(unordered(select_pair_weak(rel, vs, rng)->pair) == expect);
  CHECK_FALSE(select_pair_weak(rel, vs, rng)->fallback);
  CHECK(select_pair_gts(ds, mu, 2.0, vs, std::nullopt, nullptr)->pair == expect);
  CHECK(select_pair_gts(ds, mu, 2.0, vs, Index{10}, &rng)->pair == expect);
  CHECK(*select_pair_random(vs, rng) == expect);
  CHECK(*select_pair_mindist(ds, vs) == expect);
  CHECK(*select_pair_fulldist(ds, vs) == expect);
  const VersionSpace one(mu, Subset::from_indices({1}));
  CHECK_THROWS(select_pair_random(one, rng));
  CHECK_THROWS(select_pair_fulldist(ds, one));
}

TEST_CASE("rank selector finds the farthest point") {
  const Dataset ds = line_of({0, 1, 10});
  const DemandD mu = DemandD::uniform(3);
  const VersionSpace vs(mu, Subset::all(3));
  CHECK(RankTable(ds).farthest(1, vs, {}) == 2);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset pts = random_points(50, 2, seed);
    const DemandD u = DemandD::uniform(50);
    const VersionSpace all(u, Subset::all(50));
    const RankTable ranks(pts);
    const double delta = diameter(pts, Subset::all(50));
    for (Index x = 0; x < 50; ++x) {
      const Index y = *ranks.farthest(x, all, {});
      CHECK(pts(x, y) >= delta / 2);
      for (Index z = 0; z < 50; ++z) CHECK(pts(x, z) <= pts(x, y));
    }
  }
}

TEST_CASE("weak selector follows the triplet rule") {
  const Dataset ds = line_of({0, 1, 10});
  const DemandD mu = DemandD::uniform(3);
  const VersionSpace vs(mu, Subset::all(3));
  const TripletRelation<double> rel(ds, 2.0);
  int x_one = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    Rng rng(seed);
    const auto pick = select_pair_weak(rel, vs, rng);
    REQUIRE(pick);
    CHECK_FALSE(pick->fallback);
    if (pick->pair.first == 1) {
      ++x_one;
      CHECK(pick->pair.second == 2);
    }
  }
  CHECK(x_one > 0);

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Index n = 3 + static_cast<Index>(seed % 40);
    const Dataset pts = seed % 3 ? random_points(n, 2, seed) : random_grid_line(n, 15, seed);
    const double alpha = 1.0 + 0.5 * static_cast<double>(seed % 7);
    const DemandD u = DemandD::uniform(n);
    const VersionSpace all(u, Subset::all(n));
    const TripletRelation<double> r(pts, alpha);
    Rng rng(seed);
    const auto pick = select_pair_weak(r, all, rng);
    REQUIRE(pick);
    CHECK_FALSE(pick->fallback);
    CHECK(pts(pick->pair.first, pick->pair.second) >= diameter(pts, Subset::all(n)) / (2 * alpha));
  }
}

TEST_CASE("GTS objective and argmin") {
  const Dataset ds = line_of({0, 1, 2, 3});
  const DemandD mu = DemandD::uniform(4);
  const VersionSpace vs(mu, Subset::all(4));
  const auto pick = select_pair_gts(ds, mu, 1.0, vs, std::nullopt, nullptr);
  CHECK(pick->objective == doctest::Approx(brute_gts_min(ds, mu, 1.0, all_indices(4))));
  CHECK(pick->objective ==
        doctest::Approx(brute_gts_objective(ds, mu, 1.0, all_indices(4), pick->pair.first, pick->pair.second)));

  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const Index n = 2 + static_cast<Index>(seed % 11);
    const Dataset pts = seed % 2 ? random_points(n, 2, seed) : random_grid_line(n, 6, seed);
    const DemandD w = power_law_demand(n, 0.4, seed);
    const double alpha = 1.0 + static_cast<double>(seed % 4) * 0.5;
    const VersionSpace all(w, Subset::all(n));
    const double brute = brute_gts_min(pts, w, alpha, all_indices(n));
    const auto exact = select_pair_gts(pts, w, alpha, all, std::nullopt, nullptr);
    CHECK(exact->objective == doctest::Approx(brute).epsilon(1e-12));
    Rng rng(seed);
    const auto fast = select_pair_gts(pts, w, alpha, all, n * (n - 1) / 2, &rng);
    CHECK(fast->objective == doctest::Approx(brute).epsilon(1e-12));
    const auto sampled = select_pair_gts(pts, w, alpha, all, Index{3}, &rng);
    CHECK(sampled->objective >= brute - 1e-12);
  }
}

TEST_CASE("random selector is uniform over unordered pairs") {
  const DemandD mu = DemandD::uniform(6);
  const VersionSpace vs(mu, Subset::all(6));
  Rng rng(17);
  std::map<Pair, int> counts;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const Pair p = *select_pair_random(vs, rng);
    CHECK(p.first < p.second);
    ++counts[p];
  }
  CHECK(counts.size() == 15);
  const double expected = draws / 15.0;
  double chi2 = 0;
  for (const auto& [p, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 36.12);  // 14 degrees of freedom, p = 0.001
}

TEST_CASE("min and max distance selectors") {
  const Dataset ds = line_of({0, 1, 10});
  const DemandD mu = DemandD::uniform(3);
  const VersionSpace vs(mu, Subset::all(3));
  CHECK(*select_pair_mindist(ds, vs) == Pair{0, 1});
  CHECK(*select_pair_fulldist(ds, vs) == Pair{0, 2});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset pts = random_grid_line(20, 30, seed);
    const DemandD u = DemandD::uniform(20);
    const VersionSpace all(u, Subset::all(20));
    const Pair lo = *select_pair_mindist(pts, all), hi = *select_pair_fulldist(pts, all);
    std::optional<Pair> blo, bhi;
    for (Index a = 0; a < 20; ++a)
      for (Index b = a + 1; b < 20; ++b) {
        if (!blo || pts(a, b) < pts(blo->first, blo->second)) blo = Pair{a, b};
        if (!bhi || pts(a, b) > pts(bhi->first, bhi->second)) bhi = Pair{a, b};
      }
    CHECK(lo == *blo);
    CHECK(hi == *bhi);
  }
}

TEST_CASE("excluded pairs are never selected") {
  const Dataset ds = line_of({0, 1, 2, 3});
  const DemandD mu = DemandD::uniform(4);
  const VersionSpace vs(mu, Subset::all(4));
  PairSet excluded;
  excluded.insert(3, 0);
  CHECK(*select_pair_fulldist(ds, vs, excluded) == Pair{0, 2});
  for (Index a = 0; a < 4; ++a)
    for (Index b = a + 1; b < 4; ++b) excluded.insert(a, b);
  Rng rng(0);
  CHECK_FALSE(select_pair_fulldist(ds, vs, excluded));
  CHECK_FALSE(select_pair_random(vs, rng, excluded));
  CHECK_FALSE(select_pair_gts(ds, mu, 1.0, vs, std::nullopt, nullptr, excluded));
}

TEST_CASE("removal sets are the Voronoi cells of the answer") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset pts = random_points(40, 2, seed);
    const Subset V = Subset::all(40);
    for (double alpha : {1.0, 2.0}) {
      const Subset vx = voronoi(pts, alpha, 0, 1, V), vy = voronoi(pts, alpha, 1, 0, V);
      CHECK(removal_set(pts, alpha, 0, 1, Answer::CloserX, V) == vy);
      CHECK(removal_set(pts, alpha, 0, 1, Answer::CloserY, V) == vx);
      std::vector<Index> both(vx.begin(), vx.end());
      both.insert(both.end(), vy.begin(), vy.end());
      CHECK(removal_set(pts, alpha, 0, 1, Answer::Unsure, V) == Subset::from_indices(both));
    }
  }
}

TEST_CASE("single-point dataset needs no queries") {
  const Dataset ds = line_of({4});
  for (StrategyKind k : kAllKinds) {
    const auto out = simulate(ds, DemandD::uniform(1), k, 2.0, 0);
    CHECK(out.status == SearchStatus::FoundExact);
    CHECK(out.queries == 0);
  }
}

TEST_CASE("full-distance selector with a strong oracle behaves like binary search") {
  std::vector<double> coords(10);
  for (int i = 0; i < 10; ++i) coords[i] = i;
  const Dataset ds = line_of(coords);
  for (Index t = 0; t < 10; ++t) {
    const auto out = simulate(ds, DemandD::uniform(10), StrategyKind::WorcsIIFullDist, 1.0, t, OracleMode::Strong);
    CHECK(out.status == SearchStatus::FoundExact);
    CHECK(out.queries <= 1 + 4);
  }
}

TEST_CASE("terminal rule on two points") {
  const Dataset ds = line_of({0, 1});
  DemandD::Vector w(2);
  w << 0.3, 0.7;
  const DemandD mu(w);
  auto e = make_engine(ds, mu, 2.0, Strategy{StrategyKind::Random, 10, 0});
  REQUIRE(e->pending());
  e->answer(Answer::Unsure);
  CHECK(e->result().status == EngineStatus::FoundProbable);
  CHECK(e->result().point == 1);
  auto f = make_engine(ds, mu, 2.0, Strategy{StrategyKind::Random, 10, 0});
  const Index x = f->pending()->first;
  f->answer(Answer::CloserX);
  CHECK(f->result().status == EngineStatus::Found);
  CHECK(f->result().point == x);
  CHECK_THROWS(f->answer(Answer::CloserX));
}

TEST_CASE("coincident points end in no-progress instead of looping") {
  Dataset::DistanceMatrix d = Dataset::DistanceMatrix::Zero(3, 3);
  const Dataset ds = Dataset::from_distances({"a", "b", "c"}, d);
  for (StrategyKind k : {StrategyKind::WorcsIIFullDist, StrategyKind::Random, StrategyKind::WorcsIIWeak}) {
    const auto out = simulate(ds, DemandD::uniform(3), k, 2.0, 1);
    CHECK(out.status == SearchStatus::FailedNoProgress);
    if (k == StrategyKind::WorcsIIFullDist) CHECK(out.queries == 3);
    CHECK(out.queries <= 30);
  }
}

TEST_CASE("engine invariants under the deterministic weak oracle") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Index n = 3 + static_cast<Index>(seed * 7 % 60);
    const Dataset pts = seed % 2 ? random_points(n, 2, seed) : random_grid_line(n, 3 * n, seed);
    const DemandD mu = power_law_demand(n, 0.4, seed);
    const double alpha = std::array{1.0, 1.5, 2.0, 5.0}[seed % 4];
    const Index t = static_cast<Index>(seed % static_cast<std::uint64_t>(n));
    for (StrategyKind k : kAllKinds) {
      OracleInstance<double> oracle(pts, {alpha, OracleMode::WeakDeterministic, seed}, t);
      auto e = make_engine(pts, mu, alpha, Strategy{k, 10, seed});
      while (auto q = e->pending()) {
        const Index before = e->version_space().size();
        const Step& s = e->answer(oracle.answer(q->first, q->second));
        INFO(to_string(k) << " seed " << seed);
        CHECK(e->version_space().contains(t));
        CHECK(s.vs_size == before - s.removed);
        CHECK(e->version_space().mass() ==
              doctest::Approx(brute_mass(mu, members(e->version_space().members()))).epsilon(1e-9));
      }
      INFO(to_string(k) << " seed " << seed << " vs " << e->version_space().size());
      if (e->result().status == EngineStatus::FailedNoProgress) {
        for (Index v : e->version_space().members()) CHECK(pts(v, t) == 0);
      } else {
        CHECK(e->result().status == EngineStatus::Found);
        CHECK(pts(e->result().point, t) == 0);
      }
      CHECK(oracle.query_count() == e->steps().size());
      CHECK(e->decision_ms().size() == e->steps().size());
    }
  }
}

TEST_CASE("WORCS-I on a line shrinks mass geometrically") {
  std::vector<double> coords(32);
  for (int i = 0; i < 32; ++i) coords[i] = i;
  const Dataset ds = line_of(coords);
  const DemandD mu = DemandD::uniform(32);
  const double alpha = 2.0;
  const double c = doubling_constant(ds, mu).constant;
  const double cover_bound = std::pow(c, std::ceil(std::log2(8 * (alpha + 1))) + 3);
  for (Index t = 0; t < 32; ++t) {
    const auto out = simulate(ds, mu, StrategyKind::WorcsI, alpha, t);
    CHECK(out.status == SearchStatus::FoundExact);
    for (const auto& it : out.iterations) {
      CHECK_FALSE(it.heuristic);
      CHECK(it.mass_after <= (1 - 1 / (c * c)) * it.mass_before + 1e-12);
      if (it.cover_size > 0) CHECK(static_cast<double>(it.cover_size) <= cover_bound);
    }
  }
}

TEST_CASE("WORCS-I keeps the target inside the chosen ball") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index n = 5 + static_cast<Index>(seed % 30);
    const Dataset pts = random_points(n, 2, seed);
    const DemandD mu = power_law_demand(n, 0.4, seed);
    const double alpha = 1.0 + static_cast<double>(seed % 3);
    const Index t = static_cast<Index>(seed % static_cast<std::uint64_t>(n));
    const auto out = simulate(pts, mu, StrategyKind::WorcsI, alpha, t);
    CHECK(out.status == SearchStatus::FoundExact);
    for (const auto& it : out.iterations)
      if (it.center >= 0)
        CHECK(pts(it.center, t) <= it.diameter * (alpha + 2) / (8 * (alpha + 1)) + 1e-12);
  }
}

TEST_CASE("WORCS-I under the probabilistic oracle still terminates") {
  const Dataset ds = load_dataset({"iris"});
  const DemandD mu = power_law_demand(ds.size(), 0.4, 1);
  for (Index t : {0, 57, 149}) {
    const auto out = simulate(ds, mu, StrategyKind::WorcsI, 2.0, t, OracleMode::WeakProbabilistic, 5);
    CHECK(out.queries > 0);
    CHECK(out.status != SearchStatus::FailedTargetEliminated);
  }
}

TEST_CASE("WORCS-II mass shrink with the exact strong doubling constant") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index n = 4 + static_cast<Index>(seed % 9);
    const Dataset pts = random_points(n, 2, 500 + seed);
    const DemandD mu = power_law_demand(n, 0.4, seed);
    const double cs = strong_doubling_constant(pts, mu, StrongDoublingMode::exhaustive()).constant;
    const double alpha = std::array{1.0, 1.5, 2.0}[seed % 3];
    const std::pair<StrategyKind, double> selectors[] = {{StrategyKind::WorcsIIFullDist, 1.0},
                                                         {StrategyKind::WorcsIIRank, 0.5},
                                                         {StrategyKind::WorcsIIWeak, 1 / (2 * alpha)}};
    for (const auto& [kind, beta] : selectors) {
      const double l = std::ceil(std::log2((alpha + 1) / beta));
      const double factor = 1 - std::pow(cs, -l);
      for (Index t = 0; t < n; ++t) {
        const auto out = simulate(pts, mu, kind, alpha, t);
        for (const auto& it : out.iterations) CHECK(it.mass_after <= factor * it.mass_before + 1e-12);
      }
    }
  }
}

TEST_CASE("identical seeds reproduce identical runs") {
  const Dataset ds = load_dataset({"iris"});
  const DemandD mu = power_law_demand(ds.size(), 0.4, 0);
  for (StrategyKind k : kAllKinds) {
    const auto a = simulate(ds, mu, k, 2.0, 17, OracleMode::WeakProbabilistic, 9);
    const auto b = simulate(ds, mu, k, 2.0, 17, OracleMode::WeakProbabilistic, 9);
    REQUIRE(a.transcript.size() == b.transcript.size());
    for (std::size_t i = 0; i < a.transcript.size(); ++i) {
      CHECK(a.transcript[i].x == b.transcript[i].x);
      CHECK(a.transcript[i].y == b.transcript[i].y);
      CHECK(a.transcript[i].answer == b.transcript[i].answer);
    }
  }
}

TEST_CASE("transcripts replay and detect tampering") {
  const Dataset ds = load_dataset({"iris"});
  const DemandD mu = power_law_demand(ds.size(), 0.4, 3);
  for (StrategyKind k : kAllKinds) {
    const Strategy strategy{k, 10, 4};
    OracleInstance<double> oracle(ds, {2.0, OracleMode::WeakProbabilistic, 8}, 42);
    const auto out = run_search(ds, mu, oracle, 2.0, strategy);
    const auto json = transcript_to_json(ds, out, strategy, 2.0, 42, {"iris"});
    CHECK(json.at("steps").size() == out.queries);
    INFO(to_string(k));
    CHECK(replay_transcript(ds, mu, json).ok);

    auto tampered = json;
    tampered["steps"][0]["removed"] = json["steps"][0]["removed"].get<Index>() + 1;
    const auto report = replay_transcript(ds, mu, tampered);
    CHECK_FALSE(report.ok);
    CHECK(report.failed_step == 1);

    auto wrong_answer = json;
    const auto last = json["steps"].size() - 1;
    wrong_answer["steps"][last]["answer"] = json["steps"][last]["answer"] == "x" ? "y" : "x";
    CHECK_FALSE(replay_transcript(ds, mu, wrong_answer).ok);
  }
  const auto steps = oracle_transcript_json(ds, {Step{0, 1, Answer::Unsure}});
  CHECK(steps.dump() == R"([{"answer":"?","x":"iris-000","y":"iris-001"}])");
}
