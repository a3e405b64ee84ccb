#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "worcs/core.hpp"
#include "worcs/demand.hpp"
#include "worcs/metric_dataset.hpp"

namespace worcs {

template <typename Scalar>
struct DoublingWitness {
  Index center = 0;
  Scalar radius = 0;
  Subset subset;  // the restricting set A; empty means the whole dataset
};

/// Doubling constant c (or c_strong) with the (subset, center, radius)
/// achieving it. `exact` is false for sampled lower bounds.
template <typename Scalar>
struct DoublingReport {
  Scalar constant = 1;
  DoublingWitness<Scalar> witness;
  bool exact = true;
};

/// μ(B_x(2R) ∩ A) / μ(B_x(R) ∩ A), evaluated directly.
template <typename Scalar>
Scalar doubling_ratio(const MetricDataset<Scalar>& ds, const Demand<Scalar>& demand, Index center,
                      Scalar radius, const Subset& within) {
  Scalar inner = 0, outer = 0;
  for (Index y : within) {
    const Scalar d = ds(center, y);
    if (d <= radius) inner += demand(y);
    if (d <= 2 * radius) outer += demand(y);
  }
  return outer / inner;
}

namespace detail {

/// Per-center ordering of all points by (distance, index), shared by every
/// subset evaluated against the same dataset.
template <typename Scalar>
struct DistanceOrders {
  std::vector<std::vector<Index>> order;

  explicit DistanceOrders(const MetricDataset<Scalar>& ds) : order(static_cast<std::size_t>(ds.size())) {
    const Index n = ds.size();
    for (Index x = 0; x < n; ++x) {
      auto& o = order[static_cast<std::size_t>(x)];
      o.resize(static_cast<std::size_t>(n));
      std::iota(o.begin(), o.end(), Index{0});
      std::sort(o.begin(), o.end(), [&](Index a, Index b) {
        const Scalar da = ds(x, a), db = ds(x, b);
        return da < db || (da == db && a < b);
      });
    }
  }
};

/// sup over centers in A ∩ supp(μ) and R ≥ 0 of μ(B(2R) ∩ A)/μ(B(R) ∩ A).
///
/// The ratio is piecewise constant in R with closed balls, changing only
/// when R or 2R reaches a distance d(x, y), y ∈ A. Evaluating at every
/// R ∈ {d(x,y), d(x,y)/2} therefore gives the exact supremum.
template <typename Scalar, typename InSubset>
void restricted_sup(const MetricDataset<Scalar>& ds, const Demand<Scalar>& demand,
                    const DistanceOrders<Scalar>& orders, InSubset&& in_subset,
                    DoublingReport<Scalar>& best, bool& improved) {
  std::vector<Scalar> dist, prefix;
  auto mass_within = [&](Scalar r) {
    auto it = std::upper_bound(dist.begin(), dist.end(), r);
    return prefix[static_cast<std::size_t>(it - dist.begin())];
  };
  for (Index x = 0; x < ds.size(); ++x) {
    if (!in_subset(x) || !demand.in_support(x)) continue;
    dist.clear();
    prefix.assign(1, Scalar(0));
    for (Index y : orders.order[static_cast<std::size_t>(x)]) {
      if (!in_subset(y)) continue;
      dist.push_back(ds(x, y));
      prefix.push_back(prefix.back() + demand(y));
    }
    for (Scalar d : dist) {
      for (Scalar r : {d / 2, d}) {
        const Scalar ratio = mass_within(2 * r) / mass_within(r);
        if (ratio > best.constant) {
          best.constant = ratio;
          best.witness.center = x;
          best.witness.radius = r;
          improved = true;
        }
      }
    }
  }
}

}  // namespace detail

/// Exact doubling constant c = sup_{x ∈ supp μ, R ≥ 0} μ(B_x(2R)) / μ(B_x(R)).
template <typename Scalar>
DoublingReport<Scalar> doubling_constant(const MetricDataset<Scalar>& ds,
                                         const Demand<Scalar>& demand) {
  if (demand.size() != ds.size()) throw std::invalid_argument("demand size mismatch");
  detail::DistanceOrders<Scalar> orders(ds);
  DoublingReport<Scalar> report;
  report.witness.center = demand.support()[0];
  bool improved = false;
  detail::restricted_sup(ds, demand, orders, [](Index) { return true; }, report, improved);
  report.exact = true;
  return report;
}

/// Exact enumeration over every subset (n ≤ 16) or a sampled lower bound.
struct StrongDoublingMode {
  bool exact = true;
  Index num_subsets = 256;
  std::uint64_t seed = 0;

  static StrongDoublingMode exhaustive() { return {}; }
  static StrongDoublingMode sampled(Index num_subsets, std::uint64_t seed) {
    return {false, num_subsets, seed};
  }
};

inline constexpr Index kMaxExactStrongDoubling = 16;

/// Strong doubling constant c_strong: the doubling supremum taken
/// additionally over every subset A of the dataset. The whole dataset is
/// always one of the evaluated subsets, so the result is never below
/// doubling_constant.
template <typename Scalar>
DoublingReport<Scalar> strong_doubling_constant(const MetricDataset<Scalar>& ds,
                                                const Demand<Scalar>& demand,
                                                StrongDoublingMode mode) {
  if (demand.size() != ds.size()) throw std::invalid_argument("demand size mismatch");
  const Index n = ds.size();
  if (mode.exact && n > kMaxExactStrongDoubling)
    throw std::invalid_argument("exact strong-doubling enumeration limited to n ≤ 16");

  detail::DistanceOrders<Scalar> orders(ds);
  DoublingReport<Scalar> report;
  report.witness.center = demand.support()[0];
  report.exact = mode.exact;

  bool improved = false;
  detail::restricted_sup(ds, demand, orders, [](Index) { return true; }, report, improved);

  if (mode.exact) {
    const std::uint32_t full = (n == 32) ? ~0u : ((1u << n) - 1u);
    for (std::uint32_t mask = 1; mask < full; ++mask) {
      improved = false;
      detail::restricted_sup(
          ds, demand, orders, [mask](Index i) { return (mask >> i) & 1u; }, report, improved);
      if (improved) {
        std::vector<Index> members;
        for (Index i = 0; i < n; ++i)
          if ((mask >> i) & 1u) members.push_back(i);
        report.witness.subset = Subset::from_sorted(std::move(members));
      }
    }
    return report;
  }

  Rng rng(mode.seed);
  std::vector<char> in(static_cast<std::size_t>(n));
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index s = 0; s < mode.num_subsets && n >= 2; ++s) {
    const Index k = 2 + uniform_index(rng, n - 1);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::fill(in.begin(), in.end(), 0);
    for (Index i = 0; i < k; ++i) in[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = 1;
    improved = false;
    detail::restricted_sup(
        ds, demand, orders, [&in](Index i) { return in[static_cast<std::size_t>(i)] != 0; },
        report, improved);
    if (improved) {
      std::vector<Index> members(perm.begin(), perm.begin() + k);
      report.witness.subset = Subset::from_indices(std::move(members));
    }
  }
  return report;
}

}  // namespace worcs
