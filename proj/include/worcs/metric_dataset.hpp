#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "worcs/core.hpp"

namespace worcs {

enum class Metric { Euclidean, Manhattan, CosineDistance, Precomputed };

inline std::string to_string(Metric m) {
  switch (m) {
    case Metric::Euclidean: return "euclidean";
    case Metric::Manhattan: return "manhattan";
    case Metric::CosineDistance: return "cosine-distance";
    case Metric::Precomputed: return "precomputed";
  }
  return "unknown";
}

inline Metric parse_metric(std::string_view name) {
  if (name == "euclidean") return Metric::Euclidean;
  if (name == "manhattan") return Metric::Manhattan;
  if (name == "cosine-distance" || name == "cosine") return Metric::CosineDistance;
  throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

enum class CacheMode { FullMatrix, OnDemand };

/// Distance between two feature rows under `metric`.
///
/// The cosine variant is the angular distance acos(cos θ)/π, which satisfies
/// the triangle inequality (1 - cos θ does not). A zero vector is at distance
/// 1/2 from every nonzero vector and 0 from another zero vector.
template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar feature_distance(Metric metric, const Eigen::MatrixBase<DerivedA>& a,
                        const Eigen::MatrixBase<DerivedB>& b) {
  switch (metric) {
    case Metric::Euclidean: return (a - b).norm();
    case Metric::Manhattan: return (a - b).template lpNorm<1>();
    case Metric::CosineDistance: {
      const Scalar na = a.norm();
      const Scalar nb = b.norm();
      if (na == Scalar(0) || nb == Scalar(0)) return (na == nb) ? Scalar(0) : Scalar(0.5);
      Scalar cos = a.dot(b) / (na * nb);
      cos = std::clamp(cos, Scalar(-1), Scalar(1));
      return std::acos(cos) / std::numbers::pi_v<Scalar>;
    }
    case Metric::Precomputed: break;
  }
  throw std::logic_error("feature_distance called without a feature metric");
}

/// Immutable finite metric space: n points with stable string ids, optional
/// feature vectors and a total symmetric distance function.
///
/// Distances come either from a cached n×n matrix or are recomputed from the
/// features on each call (on-demand mode, chosen above `full_matrix_limit`).
template <typename Scalar_>
class MetricDataset {
 public:
  using Scalar = Scalar_;
  using FeatureMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using DistanceMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  static constexpr Index kDefaultFullMatrixLimit = 5000;

  MetricDataset() = default;

  static MetricDataset from_features(std::vector<std::string> ids, FeatureMatrix features,
                                     Metric metric,
                                     Index full_matrix_limit = kDefaultFullMatrixLimit) {
    if (metric == Metric::Precomputed)
      throw std::invalid_argument("feature datasets need a feature metric");
    if (static_cast<Index>(ids.size()) != features.rows())
      throw std::invalid_argument("id count does not match feature rows");
    MetricDataset ds;
    ds.ids_ = std::move(ids);
    ds.features_ = std::move(features);
    ds.metric_ = metric;
    ds.finish_ids();
    if (ds.size() <= full_matrix_limit) {
      ds.cache_ = CacheMode::FullMatrix;
      const Index n = ds.size();
      ds.dist_.resize(n, n);
      for (Index i = 0; i < n; ++i) {
        ds.dist_(i, i) = Scalar(0);
        for (Index j = i + 1; j < n; ++j) {
          const Scalar d =
              feature_distance<Scalar>(metric, ds.features_.row(i), ds.features_.row(j));
          ds.dist_(i, j) = d;
          ds.dist_(j, i) = d;
        }
      }
    } else {
      ds.cache_ = CacheMode::OnDemand;
    }
    return ds;
  }

  /// Dataset defined directly by a distance matrix. The matrix must be
  /// square, symmetric, nonnegative with a zero diagonal.
  static MetricDataset from_distances(std::vector<std::string> ids, DistanceMatrix dist) {
    const Index n = dist.rows();
    if (dist.cols() != n) throw std::invalid_argument("distance matrix must be square");
    if (static_cast<Index>(ids.size()) != n)
      throw std::invalid_argument("id count does not match distance matrix");
    for (Index i = 0; i < n; ++i) {
      if (dist(i, i) != Scalar(0)) throw std::invalid_argument("nonzero self distance");
      for (Index j = 0; j < n; ++j) {
        if (!(dist(i, j) >= Scalar(0))) throw std::invalid_argument("negative distance");
        if (dist(i, j) != dist(j, i)) throw std::invalid_argument("asymmetric distance matrix");
      }
    }
    MetricDataset ds;
    ds.ids_ = std::move(ids);
    ds.dist_ = std::move(dist);
    ds.metric_ = Metric::Precomputed;
    ds.cache_ = CacheMode::FullMatrix;
    ds.finish_ids();
    return ds;
  }

  /// 1-D points on the real line with the absolute-difference metric.
  static MetricDataset from_line(std::span<const Scalar> coords, std::string_view prefix = "p") {
    FeatureMatrix f(static_cast<Index>(coords.size()), 1);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      f(static_cast<Index>(i), 0) = coords[i];
      ids.push_back(std::string(prefix) + std::to_string(i));
    }
    return from_features(std::move(ids), std::move(f), Metric::Euclidean);
  }

  Index size() const { return static_cast<Index>(ids_.size()); }
  Index dim() const { return features_.cols(); }
  bool has_features() const { return features_.rows() > 0; }
  const FeatureMatrix& features() const { return features_; }
  Metric metric() const { return metric_; }
  CacheMode cache_mode() const { return cache_; }

  const std::string& id(Index i) const { return ids_[static_cast<std::size_t>(i)]; }
  const std::vector<std::string>& ids() const { return ids_; }

  const std::string& label(Index i) const {
    return labels_.empty() ? id(i) : labels_[static_cast<std::size_t>(i)];
  }
  void set_labels(std::vector<std::string> labels) {
    if (static_cast<Index>(labels.size()) != size())
      throw std::invalid_argument("label count does not match dataset size");
    labels_ = std::move(labels);
  }

  std::optional<Index> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  Index index_of(std::string_view id) const {
    auto i = find(id);
    if (!i) throw std::out_of_range("unknown point id '" + std::string(id) + "'");
    return *i;
  }

  Scalar distance(Index i, Index j) const {
    if (cache_ == CacheMode::FullMatrix) return dist_(i, j);
    if (i == j) return Scalar(0);
    // Fixed argument order keeps on-demand distances exactly symmetric.
    if (i > j) std::swap(i, j);
    return feature_distance<Scalar>(metric_, features_.row(i), features_.row(j));
  }

  Scalar operator()(Index i, Index j) const { return distance(i, j); }

  /// Restriction to `subset`, re-indexed 0..|subset|-1 in subset order.
  MetricDataset restrict_to(const Subset& subset) const {
    subset.check_within(size());
    std::vector<std::string> ids;
    std::vector<std::string> labels;
    for (Index i : subset) {
      ids.push_back(id(i));
      if (!labels_.empty()) labels.push_back(label(i));
    }
    MetricDataset out;
    if (metric_ != Metric::Precomputed) {
      FeatureMatrix f(subset.size(), dim());
      for (Index k = 0; k < subset.size(); ++k) f.row(k) = features_.row(subset[k]);
      out = from_features(std::move(ids), std::move(f), metric_);
    } else {
      DistanceMatrix d(subset.size(), subset.size());
      for (Index a = 0; a < subset.size(); ++a)
        for (Index b = 0; b < subset.size(); ++b) d(a, b) = dist_(subset[a], subset[b]);
      out = from_distances(std::move(ids), std::move(d));
    }
    if (!labels.empty()) out.set_labels(std::move(labels));
    return out;
  }

 private:
  void finish_ids() {
    if (ids_.empty()) throw std::invalid_argument("dataset must contain at least one point");
    index_.clear();
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!index_.emplace(ids_[i], static_cast<Index>(i)).second)
        throw std::invalid_argument("duplicate point id '" + ids_[i] + "'");
    }
  }

  std::vector<std::string> ids_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, Index> index_;
  FeatureMatrix features_;
  DistanceMatrix dist_;
  Metric metric_ = Metric::Euclidean;
  CacheMode cache_ = CacheMode::FullMatrix;
};

using Dataset = MetricDataset<double>;

/// Largest violation of the metric axioms found (0 when none). Checks every
/// triple when n ≤ `exhaustive_limit`, otherwise `samples` random triples.
template <typename Scalar>
Scalar metric_violation(const MetricDataset<Scalar>& ds, Index exhaustive_limit = 64,
                        Index samples = 10000, std::uint64_t seed = 0) {
  const Index n = ds.size();
  Scalar worst = 0;
  auto check = [&](Index i, Index j, Index k) {
    const Scalar dij = ds(i, j), djk = ds(j, k), dik = ds(i, k);
    worst = std::max(worst, dik - (dij + djk));
    worst = std::max(worst, std::abs(dij - ds(j, i)));
    worst = std::max(worst, -dij);
  };
  for (Index i = 0; i < n; ++i) worst = std::max(worst, std::abs(ds(i, i)));
  if (n <= exhaustive_limit) {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        for (Index k = 0; k < n; ++k) check(i, j, k);
  } else {
    Rng rng(seed);
    for (Index s = 0; s < samples; ++s)
      check(uniform_index(rng, n), uniform_index(rng, n), uniform_index(rng, n));
  }
  return worst;
}

}  // namespace worcs
