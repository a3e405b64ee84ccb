// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Expectations come from the brute-force helpers in
// oracles.hpp, never from the library under test.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "worcs/doubling.hpp"
#include "worcs/geometry.hpp"
#include "worcs/harness.hpp"
#include "worcs/search.hpp"

using namespace worcs;
using namespace worcs::testing;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<Verdict()> run;
};

unsigned worker_count() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

/// Runs body(i) for i in [0, n) on a few threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < worker_count(); ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
}

/// Collects the first few failure descriptions from many threads.
class Failures {
 public:
  void add(const std::string& what) {
    std::lock_guard lock(mu_);
    if (++count_ <= 3) first_ += (first_.empty() ? "" : "; ") + what;
  }
  Verdict verdict(const std::string& ok_detail) const {
    if (count_ == 0) return {true, ok_detail};
    return {false, std::to_string(count_) + " violations, e.g. " + first_};
  }

 private:
  std::mutex mu_;
  std::size_t count_ = 0;
  std::string first_;
};

std::vector<Index> members(const Subset& s) { return {s.begin(), s.end()}; }

Subset random_subset(Index n, Index k, Rng& rng) {
  std::vector<Index> all = all_indices(n);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(k));
  return Subset::from_indices(std::move(all));
}

Index uniform_in(Rng& rng, Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// --- criteria --------------------------------------------------------------

Verdict net_cover() {
  Failures fails;
  Rng rng(derive_seed(1, "net"));
  for (int inst = 0; inst < 500; ++inst) {
    const Index n = uniform_in(rng, 2, 60);
    const Dataset ds = inst % 3 == 2 ? random_grid_line(n, 20, rng()) : random_points(n, 1 + inst % 4, rng());
    const Subset A = random_subset(n, uniform_in(rng, 1, n), rng);
    const double diam = brute_diameter(ds, members(A));
    const double eps = inst % 10 == 0 ? 0.0 : std::uniform_real_distribution<double>(0, diam)(rng);
    const Subset net = epsilon_net(ds, A, eps, rng());
    for (Index a : net)
      for (Index b : net)
        if (a != b && !(ds(a, b) > eps)) fails.add("instance " + std::to_string(inst) + " packing");
    if (!net.is_subset_of(A)) fails.add("instance " + std::to_string(inst) + " escapes subset");
    for (Index p : A) {
      bool covered = false;
      for (Index c : net) covered = covered || ds(p, c) <= eps;
      if (!covered) fails.add("instance " + std::to_string(inst) + " uncovered");
    }
    if (!is_cover(ds, A, net, eps)) fails.add("instance " + std::to_string(inst) + " is_cover false");
  }
  return fails.verdict("500 instances");
}

Verdict cover_bound() {
  Failures fails;
  double worst = 0;
  std::mutex mu;
  parallel_for(100, [&](std::size_t inst) {
    Rng rng(derive_seed(2, "cover", inst));
    const Index n = uniform_in(rng, 2, 20);
    const Dataset ds = inst % 2 ? random_points(n, 2, rng()) : random_grid_line(n, 12, rng());
    const DemandD mu_d = power_law_demand(n, 0.4 * static_cast<double>(inst % 4), rng());
    const double c = brute_doubling(ds, mu_d, all_indices(n));
    const double bound = std::pow(c, 4);
    std::vector<double> radii;
    for (Index a = 0; a < n; ++a)
      for (Index b = a + 1; b < n; ++b) {
        radii.push_back(ds(a, b));
        radii.push_back(ds(a, b) / 2);
        radii.push_back(ds(a, b) / 4);
      }
    const Subset all = Subset::all(n);
    for (Index x = 0; x < n; ++x)
      for (double R : radii) {
        if (!(R > 0)) continue;
        const Subset B = ball(ds, x, 2 * R, all);
        for (int order = 0; order < 3; ++order) {
          const Subset net = epsilon_net(ds, B, R, rng());
          std::lock_guard lock(mu);
          worst = std::max(worst, static_cast<double>(net.size()) / bound);
          if (static_cast<double>(net.size()) > bound)
            fails.add(fmt("net size %g > c^4 = %g", static_cast<double>(net.size()), bound));
        }
      }
  });
  return fails.verdict(fmt("100 datasets, max |net| / c^4 = %.3f", worst));
}

Verdict doubling_oracles() {
  Failures fails;
  parallel_for(100, [&](std::size_t inst) {
    Rng rng(derive_seed(3, "doubling", inst));
    const Index n = uniform_in(rng, 1, 20);
    const Dataset ds = inst % 2 ? random_points(n, 1 + inst % 3, rng()) : random_grid_line(n, 15, rng());
    const DemandD mu = power_law_demand(n, 0.1 * static_cast<double>(inst % 11), rng());
    const double got = doubling_constant(ds, mu).constant;
    const double expect = brute_doubling(ds, mu, all_indices(n), 2000);
    if (std::abs(got - expect) > 1e-9 * expect)
      fails.add(fmt("instance %g: %.12g vs brute %.12g", static_cast<double>(inst), got, expect));
    if (n <= 12) {
      const auto exact = strong_doubling_constant(ds, mu, StrongDoublingMode::exhaustive());
      const auto sampled = strong_doubling_constant(ds, mu, StrongDoublingMode{false, 64, rng()});
      if (exact.constant < got) fails.add(fmt("strong %.6g < c %.6g", exact.constant, got));
      if (sampled.constant > exact.constant * (1 + 1e-12))
        fails.add(fmt("sampled %.6g > exact %.6g", sampled.constant, exact.constant));
    }
  });
  return fails.verdict("100 instances vs dense grid; strong >= c; sampled <= exact");
}

const StrategyKind kAllKinds[] = {StrategyKind::WorcsI,     StrategyKind::WorcsIIRank,
                                  StrategyKind::WorcsIIWeak, StrategyKind::WorcsIIFullDist,
                                  StrategyKind::GTS,         StrategyKind::FastGTS,
                                  StrategyKind::Random,      StrategyKind::MinDist};

Verdict target_retention() {
  Failures fails;
  std::atomic<std::size_t> runs{0};
  parallel_for(1000, [&](std::size_t inst) {
    Rng rng(derive_seed(4, "retention", inst));
    const Index n = uniform_in(rng, 8, 200);
    const Dataset ds = random_points(n, 1 + static_cast<Index>(inst % 3), rng());
    const DemandD mu = power_law_demand(n, 0.4, rng());
    const double alpha = std::array{1.0, 1.5, 2.0, 5.0}[inst % 4];
    const Index t = uniform_in(rng, 0, n - 1);
    for (StrategyKind k : kAllKinds) {
      OracleInstance<double> oracle(ds, {alpha, OracleMode::WeakDeterministic, 0}, t);
      const SearchOutcome out = run_search(ds, mu, oracle, alpha, Strategy{k, 10, rng()});
      ++runs;
      if (out.status != SearchStatus::FoundExact || out.returned != t)
        fails.add(to_string(k) + " instance " + std::to_string(inst) + " " + to_string(out.status));
    }
  });
  return fails.verdict(std::to_string(runs.load()) + " runs, failure rate 0");
}

Verdict worcs1_mass_shrink() {
  Failures fails;
  std::atomic<std::size_t> iterations{0};
  double tightest = 0;
  std::mutex mu_lock;
  parallel_for(200, [&](std::size_t inst) {
    Rng rng(derive_seed(5, "worcs1", inst));
    const Index n = uniform_in(rng, 3, 60);
    const Dataset ds = inst % 2 ? random_points(n, 2, rng()) : random_grid_line(n, 4 * static_cast<int>(n), rng());
    const DemandD mu = power_law_demand(n, 0.4, rng());
    const double c = brute_doubling(ds, mu, all_indices(n), 0);
    const double factor = 1 - 1 / (c * c);
    const double alpha = std::array{1.0, 1.5, 2.0, 5.0}[inst % 4];
    const Index t = uniform_in(rng, 0, n - 1);
    OracleInstance<double> oracle(ds, {alpha, OracleMode::WeakDeterministic, 0}, t);
    const SearchOutcome out = run_worcs1(ds, mu, oracle, alpha, rng());
    for (const auto& it : out.iterations) {
      ++iterations;
      if (it.mass_after > factor * it.mass_before + 1e-12)
        fails.add(fmt("run %g: %.6g > %.6g", static_cast<double>(inst), it.mass_after, factor * it.mass_before));
      std::lock_guard lock(mu_lock);
      tightest = std::max(tightest, it.mass_after / (factor * it.mass_before));
    }
  });
  return fails.verdict(std::to_string(iterations.load()) + " iterations, max ratio to bound " +
                       fmt("%.3f", tightest));
}

Verdict pair_quality() {
  Failures fails;
  Rng rng(derive_seed(6, "pairs"));
  int invocations = 0;
  double worst_rank = 1e300, worst_weak = 1e300;
  for (int inst = 0; invocations < 10000; ++inst) {
    const Index n = uniform_in(rng, 3, 80);
    const Dataset ds = inst % 2 ? random_points(n, 1 + inst % 3, rng()) : random_grid_line(n, 2 * static_cast<int>(n), rng());
    const DemandD mu = DemandD::uniform(n);
    const RankTable ranks(ds);
    for (int rep = 0; rep < 10; ++rep, invocations += 2) {
      const VersionSpace vs(mu, random_subset(n, uniform_in(rng, 2, n), rng));
      const double delta = brute_diameter(ds, members(vs.members()));
      const auto r = select_pair_rank(ranks, vs, rng);
      if (!r || !vs.contains(r->first) || !vs.contains(r->second)) {
        fails.add("rank selector returned no admissible pair");
      } else {
        const double d = ds(r->first, r->second);
        if (d < delta / 2) fails.add(fmt("rank d %.6g < %.6g", d, delta / 2));
        if (delta > 0) worst_rank = std::min(worst_rank, d / delta);
      }
      const double alpha = std::array{1.0, 1.5, 2.0, 5.0}[rep % 4];
      const TripletRelation<double> rel(ds, alpha);
      const auto w = select_pair_weak(rel, vs, rng);
      if (!w || !vs.contains(w->pair.first) || !vs.contains(w->pair.second)) {
        fails.add("weak selector returned no admissible pair");
      } else {
        const double d = ds(w->pair.first, w->pair.second);
        if (d < delta / (2 * alpha)) fails.add(fmt("weak d %.6g < %.6g", d, delta / (2 * alpha)));
        if (delta > 0) worst_weak = std::min(worst_weak, d * 2 * alpha / delta);
      }
    }
  }
  return fails.verdict(std::to_string(invocations) + " invocations, min d/(D/2) rank " + fmt("%.3f", 2 * worst_rank) +
                       ", min d/(D/2a) weak " + fmt("%.3f", worst_weak));
}

Verdict gts_equivalence() {
  Failures fails;
  Rng rng(derive_seed(7, "gts"));
  for (int inst = 0; inst < 200; ++inst) {
    const Index n = uniform_in(rng, 2, 30);
    const Dataset ds = inst % 2 ? random_points(n, 2, rng()) : random_grid_line(n, 10, rng());
    const DemandD mu = power_law_demand(n, 0.4 * static_cast<double>(inst % 5), rng());
    const double alpha = std::array{1.0, 1.5, 2.0, 5.0}[inst % 4];
    const VersionSpace vs(mu, random_subset(n, uniform_in(rng, 2, std::min<Index>(n, 12)), rng));
    const auto V = members(vs.members());
    const double expect = brute_gts_min(ds, mu, alpha, V);
    const auto exact = select_pair_gts(ds, mu, alpha, vs, std::nullopt, nullptr);
    const std::string tag = "case " + std::to_string(inst);
    if (!exact) {
      fails.add(tag + ": no pair");
      continue;
    }
    const double own = brute_gts_objective(ds, mu, alpha, V, exact->pair.first, exact->pair.second);
    if (own != expect) fails.add(tag + fmt(": GTS pair objective %.17g vs min %.17g", own, expect));
    if (std::abs(exact->objective - own) > 1e-12) fails.add(tag + ": reported objective differs");
    const Index k = static_cast<Index>(V.size() * (V.size() - 1) / 2);
    Rng sampler(rng());
    const auto fast = select_pair_gts(ds, mu, alpha, vs, k, &sampler);
    if (!fast || brute_gts_objective(ds, mu, alpha, V, fast->pair.first, fast->pair.second) != expect)
      fails.add(tag + ": Fast-GTS with k = C(|V|,2) misses the minimum");
  }
  return fails.verdict("200 cases with |V| <= 12");
}

Verdict iris_query_ordering() {
  ExperimentConfig c;
  c.dataset = "iris";
  c.strategies = {"worcs2-weak", "worcs2-rank", "random", "mindist"};
  c.alpha = 2;
  c.demand_exponent = 0.4;
  c.oracle = "weak-probabilistic";
  c.trials = 2000;
  c.threads = worker_count();
  const auto r = run_experiment(c);
  const double weak = r.row("worcs2-weak").mean_queries, rank = r.row("worcs2-rank").mean_queries;
  const double random = r.row("random").mean_queries, mindist = r.row("mindist").mean_queries;
  const bool ordered = weak <= rank && rank <= random;
  const bool mindist_ok = mindist >= 2 * random;
  const bool weak_range = weak >= 5 && weak <= 9;
  std::string detail = fmt("weak %.2f, rank %.2f, random %.2f, ", weak, rank, random) +
                       fmt("mindist %.2f", mindist);
  if (!ordered) detail += "; ordering weak <= rank <= random violated";
  if (!mindist_ok) detail += "; mindist < 2x random";
  if (!weak_range) detail += "; weak mean outside [5, 9]";
  return {ordered && mindist_ok && weak_range, detail};
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

Verdict sweep_sanity() {
  Verdict v;
  const std::vector<double> sizes = {10, 20, 50, 100, 200, 500, 1000};
  ExperimentConfig c;
  c.dataset = "uniform-cube(2,1000,1)";
  c.strategies = {"worcs2-weak", "worcs2-rank", "random"};
  c.alpha = 2;
  c.trials = 200;
  c.threads = worker_count();
  c.sweep = SweepSpec{"N", sizes};
  const auto n_sweep = sweep_scalability(c);
  std::ostringstream detail;
  for (const auto& s : c.strategies) {
    double prev = 0;
    for (double n : sizes) {
      const double med = n_sweep.row(s, n).median_queries;
      if (med < prev) {
        v.pass = false;
        detail << s << " median drops at N=" << n << "; ";
      }
      prev = med;
    }
  }
  std::vector<double> means;
  for (double n : sizes) means.push_back(n_sweep.row("worcs2-weak", n).mean_queries);
  const double slope = loglog_slope(sizes, means);
  detail << "weak log-log slope " << fmt("%.3f", slope);
  if (!(slope > 0.2 && slope < 0.9)) v.pass = false;

  ExperimentConfig e;
  e.dataset = "iris";
  e.strategies = {"worcs2-weak", "worcs2-rank", "random"};
  e.alpha = 2;
  e.trials = 500;
  e.threads = worker_count();
  e.sweep = SweepSpec{"exponent", {0.1, 1, 10, 100}};
  const auto exp_sweep = sweep_exponent(e);
  for (const auto& s : e.strategies) {
    double lo = 1e300, hi = 0;
    for (double x : e.sweep->values) {
      lo = std::min(lo, exp_sweep.row(s, x).mean_queries);
      hi = std::max(hi, exp_sweep.row(s, x).mean_queries);
    }
    detail << "; " << s << " exponent range " << fmt("%.2f..%.2f", lo, hi);
    if (hi > 2 * lo) v.pass = false;
  }
  v.detail = detail.str();
  return v;
}

Verdict determinism() {
  ExperimentConfig c;
  c.dataset = "iris";
  c.strategies = {"worcs1", "worcs2-rank", "worcs2-weak", "fast-gts", "random"};
  c.trials = 50;
  c.master_seed = 12345;
  const std::string a = result_csv(run_experiment(c));
  const std::string b = result_csv(run_experiment(c));
  c.threads = worker_count();
  const std::string threaded = result_csv(run_experiment(c));
  if (a != b) return {false, "reruns differ"};
  if (a != threaded) return {false, "threaded run differs"};
  return {true, std::to_string(a.size()) + " bytes identical across reruns and threads"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"net-cover", 10, net_cover},
      {"cover-bound", 30, cover_bound},
      {"doubling-oracles", 60, doubling_oracles},
      {"target-retention", 300, target_retention},
      {"worcs1-mass-shrink", 300, worcs1_mass_shrink},
      {"pair-quality", 300, pair_quality},
      {"gts-equivalence", 300, gts_equivalence},
      {"iris-ordering", 300, iris_query_ordering},
      {"sweep-sanity", 600, sweep_sanity},
      {"determinism", 300, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_s) {
      v.pass = false;
      v.detail += fmt("; over time budget %.0f s", c.budget_s);
    }
    failed += !v.pass;
    std::printf("%s %-20s %6.1fs  %s\n", v.pass ? "PASS" : "FAIL", c.name.c_str(), secs, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
