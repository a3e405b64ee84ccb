#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "worcs/core.hpp"
#include "worcs/metric_dataset.hpp"

namespace worcs {

/// Farthest pair of `subset` (lexicographically smallest on ties) and its
/// distance. A singleton yields (i, i, 0).
template <typename Scalar>
std::pair<std::pair<Index, Index>, Scalar> diameter_pair(const MetricDataset<Scalar>& ds,
                                                         const Subset& subset) {
  if (subset.empty()) throw std::invalid_argument("empty set has no diameter");
  std::pair<Index, Index> best{subset[0], subset[0]};
  Scalar diam = 0;
  for (Index a = 0; a < subset.size(); ++a)
    for (Index b = a + 1; b < subset.size(); ++b) {
      const Scalar d = ds(subset[a], subset[b]);
      if (d > diam) {
        diam = d;
        best = {subset[a], subset[b]};
      }
    }
  return {best, diam};
}

template <typename Scalar>
Scalar diameter(const MetricDataset<Scalar>& ds, const Subset& subset) {
  return diameter_pair(ds, subset).second;
}

/// B_center(radius) ∩ within.
template <typename Scalar>
Subset ball(const MetricDataset<Scalar>& ds, Index center, Scalar radius, const Subset& within) {
  if (!(radius >= Scalar(0))) throw std::invalid_argument("ball radius must be >= 0");
  if (!within.contains(center)) throw std::invalid_argument("ball center outside subset");
  std::vector<Index> out;
  for (Index y : within)
    if (ds(center, y) <= radius) out.push_back(y);
  return Subset::from_sorted(std::move(out));
}

/// Greedy ε-net scanning points in the given order: a point joins the net
/// when it is farther than eps from every net point chosen so far.
template <typename Scalar>
Subset epsilon_net_ordered(const MetricDataset<Scalar>& ds, std::span<const Index> scan_order,
                           Scalar eps) {
  if (!(eps >= Scalar(0))) throw std::invalid_argument("net radius must be >= 0");
  if (scan_order.empty()) throw std::invalid_argument("net of an empty set");
  std::vector<Index> net;
  for (Index p : scan_order) {
    bool separated = true;
    for (Index q : net)
      if (ds(p, q) <= eps) {
        separated = false;
        break;
      }
    if (separated) net.push_back(p);
  }
  return Subset::from_indices(std::move(net));
}

/// Greedy ε-net whose scan order is a permutation fixed by `seed`.
template <typename Scalar>
Subset epsilon_net(const MetricDataset<Scalar>& ds, const Subset& subset, Scalar eps,
                   std::uint64_t seed) {
  std::vector<Index> order(subset.begin(), subset.end());
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return epsilon_net_ordered(ds, std::span<const Index>(order), eps);
}

/// True iff every point of `subset` lies within eps of some center.
template <typename Scalar>
bool is_cover(const MetricDataset<Scalar>& ds, const Subset& subset, const Subset& centers,
              Scalar eps) {
  if (!centers.is_subset_of(subset)) throw std::invalid_argument("cover centers outside subset");
  for (Index p : subset) {
    bool covered = false;
    for (Index c : centers)
      if (ds(p, c) <= eps) {
        covered = true;
        break;
      }
    if (!covered) return false;
  }
  return true;
}

}  // namespace worcs
