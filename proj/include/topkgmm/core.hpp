#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "topkgmm/error.hpp"

namespace topk {

using ItemId = std::uint32_t;

/// Id 0 is the no-purchase option whenever a universe is used for choices.
inline constexpr ItemId kNoPurchase = 0;

inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

class Universe {
 public:
  Universe() = default;
  explicit Universe(std::size_t size, bool has_null = false);

  std::size_t size() const noexcept { return size_; }
  bool has_null() const noexcept { return has_null_; }
  bool contains(ItemId id) const noexcept { return id < size_; }

  // Two universes are interchangeable when they have the same item count;
  // the null flag only records how id 0 is interpreted.
  friend bool operator==(const Universe& a, const Universe& b) noexcept {
    return a.size_ == b.size_;
  }

 private:
  std::size_t size_ = 2;
  bool has_null_ = false;
};

/// An ordered list of k distinct items over a universe.
class TopKList {
 public:
  TopKList() = default;

  /// Validates and builds a list. Throws Error on duplicates, out-of-range
  /// ids, an empty list, or k > u.
  static TopKList make(std::span<const ItemId> items, Universe universe);
  static TopKList make(std::initializer_list<ItemId> items, Universe universe) {
    return make(std::span<const ItemId>(items.begin(), items.size()), universe);
  }

  /// Skips validation. For producers that guarantee the invariants.
  static TopKList trusted(std::vector<ItemId> items, Universe universe) {
    TopKList list;
    list.items_ = std::move(items);
    list.universe_ = universe;
    return list;
  }

  std::size_t k() const noexcept { return items_.size(); }
  const Universe& universe() const noexcept { return universe_; }
  const std::vector<ItemId>& items() const noexcept { return items_; }
  ItemId operator[](std::size_t rank) const { return items_[rank]; }

  /// 0-based rank of `id`, or k() when the item is unranked.
  std::size_t rank_of(ItemId id) const noexcept;
  bool contains(ItemId id) const noexcept { return rank_of(id) < k(); }

  friend bool operator==(const TopKList& a, const TopKList& b) {
    return a.universe_ == b.universe_ && a.items_ == b.items_;
  }

 private:
  std::vector<ItemId> items_;
  Universe universe_;
};

/// Generalized Mallows model over top-k lists.
///   weights[0] is the weight shared by items outside the center,
///   weights[i] is the weight of the item at center rank i (1-based).
class TopKGMM {
 public:
  TopKGMM() = default;
  TopKGMM(TopKList center, double beta, double p, std::vector<double> weights);

  /// Unit weights.
  static TopKGMM with_unit_weights(TopKList center, double beta, double p);

  const TopKList& center() const noexcept { return center_; }
  const Universe& universe() const noexcept { return center_.universe(); }
  std::size_t k() const noexcept { return center_.k(); }
  std::size_t u() const noexcept { return center_.universe().size(); }
  double beta() const noexcept { return beta_; }
  double p() const noexcept { return p_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double w0() const noexcept { return weights_[0]; }
  /// Weight of the center item at 1-based rank `rank`.
  double weight_at_rank(std::size_t rank) const { return weights_[rank]; }
  double min_center_weight() const;

  friend bool operator==(const TopKGMM& a, const TopKGMM& b) {
    return a.center_ == b.center_ && a.beta_ == b.beta_ && a.p_ == b.p_ &&
           a.weights_ == b.weights_;
  }

 private:
  TopKList center_;
  double beta_ = 0.0;
  double p_ = 1.0;
  std::vector<double> weights_;
};

struct InversionVectors {
  std::vector<std::int64_t> inversions;       // I, indexed by center rank - 1
  std::vector<std::int64_t> incomparables;    // P, indexed by center rank - 1
  std::int64_t outside_pairs = 0;             // Q
};

/// Pairwise disagreement over the items ranked by either list: 1 for each pair
/// ordered oppositely, p for each pair comparable in exactly one list.
double kendall_p_distance(const TopKList& a, const TopKList& b, double p);

/// Inversion vectors of `tau` relative to `center`. P counts every unranked
/// lower-priority item, not just those ranked by one of the two lists.
InversionVectors inversion_vectors(const TopKList& tau, const TopKList& center);

/// w0 p Q + sum_i w_i (I_i + p P_i)
double weighted_displacement(const TopKList& tau, const TopKGMM& model);

/// exp(-beta * weighted_displacement)
double unnormalized_mass(const TopKList& tau, const TopKGMM& model);

/// u! / (u-k)!, saturating at UINT64_MAX.
std::uint64_t count_topk_lists(std::size_t u, std::size_t k);

/// Visits every ordered arrangement of k distinct items exactly once, in
/// lexicographic order of the item sequence.
void for_each_topk_list(Universe universe, std::size_t k,
                        const std::function<void(const TopKList&)>& visit,
                        std::uint64_t cap = kDefaultEnumerationCap);

std::vector<TopKList> enumerate_all(Universe universe, std::size_t k,
                                    std::uint64_t cap = kDefaultEnumerationCap);

/// Exact distribution by enumeration, for small instances.
class ExactPmf {
 public:
  static ExactPmf compute(const TopKGMM& model, std::uint64_t cap = kDefaultEnumerationCap);

  const std::vector<std::pair<TopKList, double>>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  /// Probability of `tau`; 0 when tau is not a list of the model's k.
  double probability(const TopKList& tau) const;
  /// Position of `tau` in entries(), or size() if absent.
  std::size_t index_of(const TopKList& tau) const;

 private:
  std::vector<std::pair<TopKList, double>> entries_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
  std::size_t u_ = 0;
};

inline ExactPmf exact_pmf(const TopKGMM& model, std::uint64_t cap = kDefaultEnumerationCap) {
  return ExactPmf::compute(model, cap);
}

}  // namespace topk
