#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "worcs/core.hpp"
#include "worcs/metric_dataset.hpp"

namespace worcs {

/// Probability distribution μ over the points of a dataset.
template <typename Scalar>
class Demand {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  static constexpr double kSumTolerance = 1e-9;

  Demand() = default;

  explicit Demand(Vector weights) : weights_(std::move(weights)) {
    if (weights_.size() == 0) throw std::invalid_argument("demand over an empty set");
    for (Index i = 0; i < weights_.size(); ++i) {
      if (!(weights_(i) >= Scalar(0) && weights_(i) <= Scalar(1)))
        throw std::invalid_argument("demand mass outside [0, 1]");
    }
    if (std::abs(static_cast<double>(weights_.sum()) - 1.0) > kSumTolerance)
      throw std::invalid_argument("demand masses must sum to 1");
  }

  static Demand uniform(Index n) { return Demand(Vector::Constant(n, Scalar(1) / Scalar(n))); }

  Index size() const { return weights_.size(); }
  Scalar operator()(Index i) const { return weights_(i); }
  const Vector& weights() const { return weights_; }

  /// μ(A), summed in ascending index order.
  Scalar mass(const Subset& subset) const {
    Scalar m = 0;
    for (Index i : subset) m += weights_(i);
    return m;
  }

  Subset support() const {
    std::vector<Index> s;
    for (Index i = 0; i < size(); ++i)
      if (weights_(i) > Scalar(0)) s.push_back(i);
    return Subset::from_sorted(std::move(s));
  }

  bool in_support(Index i) const { return weights_(i) > Scalar(0); }

  /// Index of the largest mass in `subset`; lowest index on ties.
  Index argmax(const Subset& subset) const {
    Index best = subset[0];
    for (Index i : subset)
      if (weights_(i) > weights_(best)) best = i;
    return best;
  }

  /// Copy restricted to `subset` and renormalized.
  Demand restrict_to(const Subset& subset) const {
    Vector w(subset.size());
    for (Index k = 0; k < subset.size(); ++k) w(k) = weights_(subset[k]);
    const Scalar total = w.sum();
    if (total <= Scalar(0)) throw std::invalid_argument("restriction has zero mass");
    return Demand(w / total);
  }

 private:
  Vector weights_;
};

/// Shannon entropy of μ in bits; zero-mass points contribute nothing.
template <typename Scalar>
Scalar entropy(const Demand<Scalar>& demand) {
  Scalar h = 0;
  for (Index i = 0; i < demand.size(); ++i) {
    const Scalar p = demand(i);
    if (p > Scalar(0)) h -= p * std::log2(p);
  }
  return h;
}

/// Rank-based power law: a seeded permutation assigns ranks 1..n and the
/// point of rank r gets mass ∝ r^(-exponent). Exponent 0 gives the uniform
/// distribution.
template <typename Scalar = double>
Demand<Scalar> power_law_demand(Index n, Scalar exponent, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("power-law demand needs n >= 1");
  if (!(exponent >= Scalar(0))) throw std::invalid_argument("power-law exponent must be >= 0");
  std::vector<Index> rank_of(static_cast<std::size_t>(n));
  std::iota(rank_of.begin(), rank_of.end(), Index{1});
  Rng rng(seed);
  std::shuffle(rank_of.begin(), rank_of.end(), rng);
  typename Demand<Scalar>::Vector w(n);
  for (Index i = 0; i < n; ++i)
    w(i) = std::pow(static_cast<Scalar>(rank_of[static_cast<std::size_t>(i)]), -exponent);
  w /= w.sum();
  return Demand<Scalar>(std::move(w));
}

/// Serialized as [{"id": ..., "mass": ...}, ...] in dataset order.
template <typename Scalar>
nlohmann::json demand_to_json(const MetricDataset<Scalar>& ds, const Demand<Scalar>& demand) {
  nlohmann::json out = nlohmann::json::array();
  for (Index i = 0; i < ds.size(); ++i)
    out.push_back({{"id", ds.id(i)}, {"mass", static_cast<double>(demand(i))}});
  return out;
}

/// Inverse of demand_to_json. Every dataset id must appear exactly once.
template <typename Scalar>
Demand<Scalar> demand_from_json(const MetricDataset<Scalar>& ds, const nlohmann::json& j) {
  if (!j.is_array()) throw std::invalid_argument("demand JSON must be an array");
  typename Demand<Scalar>::Vector w = Demand<Scalar>::Vector::Constant(ds.size(), Scalar(-1));
  for (const auto& entry : j) {
    const Index i = ds.index_of(entry.at("id").get<std::string>());
    if (w(i) >= Scalar(0)) throw std::invalid_argument("duplicate id in demand JSON");
    w(i) = static_cast<Scalar>(entry.at("mass").get<double>());
  }
  if ((w.array() < Scalar(0)).any()) throw std::invalid_argument("demand JSON misses ids");
  return Demand<Scalar>(std::move(w));
}

using DemandD = Demand<double>;

}  // namespace worcs
