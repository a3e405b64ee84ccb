#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace worcs {

using Index = Eigen::Index;
using Rng = std::mt19937_64;

/// Sorted, duplicate-free list of point indices into a dataset.
///
/// Carries the subsets the algorithms manipulate: version spaces, nets,
/// balls and Voronoi cells. Membership tests are O(log n).
class Subset {
 public:
  Subset() = default;

  static Subset all(Index n) {
    Subset s;
    s.members_.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) s.members_[static_cast<std::size_t>(i)] = i;
    return s;
  }

  static Subset from_indices(std::vector<Index> indices) {
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    Subset s;
    s.members_ = std::move(indices);
    return s;
  }

  /// Caller guarantees `sorted` is strictly increasing.
  static Subset from_sorted(std::vector<Index> sorted) {
    Subset s;
    s.members_ = std::move(sorted);
    return s;
  }

  Index size() const { return static_cast<Index>(members_.size()); }
  bool empty() const { return members_.empty(); }
  Index operator[](Index k) const { return members_[static_cast<std::size_t>(k)]; }
  std::span<const Index> members() const { return members_; }
  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }

  bool contains(Index i) const { return std::binary_search(members_.begin(), members_.end(), i); }

  bool is_subset_of(const Subset& other) const {
    return std::includes(other.members_.begin(), other.members_.end(), members_.begin(),
                         members_.end());
  }

  /// Throws unless every member lies in [0, n).
  void check_within(Index n) const {
    if (!members_.empty() && (members_.front() < 0 || members_.back() >= n))
      throw std::out_of_range("subset index outside dataset");
  }

  friend bool operator==(const Subset&, const Subset&) = default;

 private:
  std::vector<Index> members_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent seed for a named random stream (target sampling, oracle noise,
/// selector sampling, net scan order, ...) derived from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master ^ h) + index);
}

/// Uniform integer in [0, n).
inline Index uniform_index(Rng& rng, Index n) {
  std::uniform_int_distribution<Index> dist(0, n - 1);
  return dist(rng);
}

}  // namespace worcs
