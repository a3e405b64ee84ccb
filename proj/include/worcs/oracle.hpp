#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "worcs/core.hpp"
#include "worcs/metric_dataset.hpp"

namespace worcs {

enum class Answer { CloserX, CloserY, Unsure };

/// Wire spelling: "x", "y" or "?".
inline std::string_view to_string(Answer a) {
  switch (a) {
    case Answer::CloserX: return "x";
    case Answer::CloserY: return "y";
    case Answer::Unsure: return "?";
  }
  return "?";
}

inline Answer parse_answer(std::string_view s) {
  if (s == "x") return Answer::CloserX;
  if (s == "y") return Answer::CloserY;
  if (s == "?" || s == "unsure") return Answer::Unsure;
  throw std::invalid_argument("unknown answer '" + std::string(s) + "'");
}

inline Answer mirror(Answer a) {
  if (a == Answer::CloserX) return Answer::CloserY;
  if (a == Answer::CloserY) return Answer::CloserX;
  return a;
}

enum class OracleMode { Strong, WeakDeterministic, WeakProbabilistic };

inline std::string to_string(OracleMode m) {
  switch (m) {
    case OracleMode::Strong: return "strong";
    case OracleMode::WeakDeterministic: return "weak-deterministic";
    case OracleMode::WeakProbabilistic: return "weak-probabilistic";
  }
  return "unknown";
}

inline OracleMode parse_oracle_mode(std::string_view s) {
  if (s == "strong") return OracleMode::Strong;
  if (s == "weak-deterministic") return OracleMode::WeakDeterministic;
  if (s == "weak-probabilistic") return OracleMode::WeakProbabilistic;
  throw std::invalid_argument("unknown oracle mode '" + std::string(s) + "'");
}

struct OracleConfig {
  double alpha = 1.0;
  OracleMode mode = OracleMode::WeakDeterministic;
  std::uint64_t seed = 0;
};

/// Answer rule for distances dx = d(x,t), dy = d(y,t).
///
/// Strong: x iff dx ≤ dy. Weak modes answer for sure outside the gray zone
/// (α·dx ≤ dy or α·dy ≤ dx). Inside it, WeakDeterministic always abstains
/// and WeakProbabilistic answers the closer point with probability
/// log(far/near)/log α. Exact ties abstain for α > 1 and follow the strong
/// rule for α = 1.
template <typename Scalar>
Answer decide(OracleMode mode, Scalar alpha, Scalar dx, Scalar dy, Rng* rng = nullptr) {
  if (mode == OracleMode::Strong || alpha == Scalar(1))
    return dx <= dy ? Answer::CloserX : Answer::CloserY;
  if (dx == dy) return Answer::Unsure;
  if (alpha * dx <= dy) return Answer::CloserX;
  if (alpha * dy <= dx) return Answer::CloserY;
  if (mode == OracleMode::WeakDeterministic) return Answer::Unsure;
  if (rng == nullptr) throw std::logic_error("probabilistic oracle needs a random source");
  const bool x_closer = dx < dy;
  const Scalar p = std::log(x_closer ? dy / dx : dx / dy) / std::log(alpha);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(*rng) < static_cast<double>(p)) return x_closer ? Answer::CloserX : Answer::CloserY;
  return Answer::Unsure;
}

/// Comparison oracle O_t(x, y) for a fixed hidden target t.
template <typename Scalar>
class OracleInstance {
 public:
  OracleInstance(const MetricDataset<Scalar>& ds, OracleConfig config, Index target)
      : ds_(&ds), config_(config), target_(target), rng_(config.seed) {
    if (!(config.alpha >= 1.0)) throw std::invalid_argument("oracle alpha must be >= 1");
    if (target < 0 || target >= ds.size()) throw std::out_of_range("oracle target out of range");
  }

  Answer answer(Index x, Index y) {
    if (x == y) throw std::invalid_argument("degenerate query");
    if (x < 0 || y < 0 || x >= ds_->size() || y >= ds_->size())
      throw std::out_of_range("query index out of range");
    ++query_count_;
    return decide<Scalar>(config_.mode, static_cast<Scalar>(config_.alpha), (*ds_)(x, target_),
                          (*ds_)(y, target_), &rng_);
  }

  std::size_t query_count() const { return query_count_; }
  const OracleConfig& config() const { return config_; }
  double alpha() const { return config_.alpha; }

  /// Exposed for harnesses and tests that score outcomes; search strategies
  /// never read it.
  Index target() const { return target_; }

 private:
  const MetricDataset<Scalar>* ds_;
  OracleConfig config_;
  Index target_;
  Rng rng_;
  std::size_t query_count_ = 0;
};

/// α-weighted Voronoi cell Vor(x, y, A) = {v ∈ A : α·d(x,v) ≤ d(y,v)}.
template <typename Scalar>
Subset voronoi(const MetricDataset<Scalar>& ds, Scalar alpha, Index x, Index y,
               const Subset& within) {
  if (x == y) throw std::invalid_argument("voronoi cell of a point against itself");
  if (!(alpha >= Scalar(1))) throw std::invalid_argument("alpha must be >= 1");
  std::vector<Index> out;
  for (Index v : within)
    if (alpha * ds(x, v) <= ds(y, v)) out.push_back(v);
  return Subset::from_sorted(std::move(out));
}

enum class Relation { BCloser, CCloser, Gray };

/// Three-valued relative-distance knowledge for triplets (a, b, c): whether
/// α·d(a,b) ≤ d(a,c), α·d(a,c) ≤ d(a,b), or neither. When both hold (ties
/// at α = 1, or coincident points) the lower index of b, c counts as closer.
template <typename Scalar>
class TripletRelation {
 public:
  TripletRelation(const MetricDataset<Scalar>& ds, Scalar alpha) : ds_(&ds), alpha_(alpha) {
    if (!(alpha >= Scalar(1))) throw std::invalid_argument("alpha must be >= 1");
  }

  Relation operator()(Index a, Index b, Index c) const {
    if (a == b || a == c || b == c) throw std::invalid_argument("triplet arguments must be distinct");
    const Scalar dab = (*ds_)(a, b), dac = (*ds_)(a, c);
    const bool b_closer = alpha_ * dab <= dac;
    const bool c_closer = alpha_ * dac <= dab;
    if (b_closer && c_closer) return b < c ? Relation::BCloser : Relation::CCloser;
    if (b_closer) return Relation::BCloser;
    if (c_closer) return Relation::CCloser;
    return Relation::Gray;
  }

  Scalar alpha() const { return alpha_; }
  Index size() const { return ds_->size(); }

 private:
  const MetricDataset<Scalar>* ds_;
  Scalar alpha_;
};

}  // namespace worcs
