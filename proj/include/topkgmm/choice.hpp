#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "topkgmm/core.hpp"
#include "topkgmm/profile.hpp"
#include "topkgmm/random.hpp"

namespace topk {

/// Offered items, ascending, never containing the no-purchase id.
class Assortment {
 public:
  Assortment() = default;

  static Assortment make(std::span<const ItemId> items, Universe universe);
  static Assortment make(std::initializer_list<ItemId> items, Universe universe) {
    return make(std::span<const ItemId>(items.begin(), items.size()), universe);
  }

  const std::vector<ItemId>& items() const noexcept { return items_; }
  const Universe& universe() const noexcept { return universe_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  bool contains(ItemId id) const noexcept;
  /// Member of the assortment or the no-purchase option.
  bool offers(ItemId id) const noexcept { return id == kNoPurchase || contains(id); }
  /// The no-purchase option followed by the items.
  std::vector<ItemId> with_null() const;

 private:
  std::vector<ItemId> items_;
  Universe universe_;
};

/// Selection probability of each offered option, ascending by id (id 0 first).
class ChoiceDistribution {
 public:
  ChoiceDistribution() = default;
  explicit ChoiceDistribution(std::vector<std::pair<ItemId, double>> entries);

  const std::vector<std::pair<ItemId, double>>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  /// 0 for ids not offered.
  double operator[](ItemId id) const;
  double total() const;

 private:
  std::vector<std::pair<ItemId, double>> entries_;
};

/// `item probability` lines sorted by id.
void write_choice_distribution(std::ostream& out, const ChoiceDistribution& dist);

/// Highest-ranked offered option in tau; uniform over the offered options
/// when tau ranks none of them.
ItemId choice(const TopKList& tau, const Assortment& a, Rng& rng);

/// Mass of profile s that falls on each offered option through the uniform
/// tie rule (tau ranks no offered option). Same value for every option.
double pi_bar(Profile s, const Assortment& a, const TopKGMM& model);

ChoiceDistribution dypchip(const TopKGMM& model, const Assortment& a,
                           std::uint64_t profile_cap = kDefaultProfileCap);
/// Reuses a profile table built for `model`.
ChoiceDistribution dypchip(const TopKGMM& model, const ProfileDistribution& profiles,
                           const Assortment& a);

ChoiceDistribution choice_prob_bruteforce(const TopKGMM& model, const Assortment& a,
                                          std::uint64_t cap = kDefaultEnumerationCap);
ChoiceDistribution choice_prob_bruteforce(const ExactPmf& pmf, const Assortment& a);

struct MixtureModel {
  std::vector<std::pair<TopKGMM, double>> components;

  /// Throws InvalidModel unless weights are in (0, 1], sum to 1, and every
  /// component shares one universe.
  void validate() const;
};

ChoiceDistribution mixture_choice_prob(const MixtureModel& mix, const Assortment& a);

struct ChoiceObservation {
  Assortment assortment;
  ItemId chosen = kNoPurchase;
};

/// `# choicelog u=<u>` then `<chosen> : <ids>` per line.
void write_choice_log(std::ostream& out, std::span<const ChoiceObservation> log, std::size_t u);
std::vector<ChoiceObservation> read_choice_log(std::istream& in, std::size_t* universe_size = nullptr);

}  // namespace topk
