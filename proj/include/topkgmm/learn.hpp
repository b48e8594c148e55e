#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "topkgmm/choice.hpp"
#include "topkgmm/prim.hpp"

namespace topk {

/// Answers one choice per offered assortment. Every query is an independent
/// draw and is counted.
class ChoiceOracle {
 public:
  virtual ~ChoiceOracle() = default;

  ItemId query(const Assortment& a) {
    ++queries_;
    return answer(a);
  }
  std::uint64_t queries() const noexcept { return queries_; }
  virtual Universe universe() const = 0;

 protected:
  virtual ItemId answer(const Assortment& a) = 0;

 private:
  std::uint64_t queries_ = 0;
};

/// Draws a list from the model per query and applies the choice rule.
class ModelOracle final : public ChoiceOracle {
 public:
  ModelOracle(std::shared_ptr<const Sampler> sampler, std::uint64_t seed);
  ModelOracle(const TopKGMM& model, std::uint64_t seed);
  Universe universe() const override { return sampler_->model().universe(); }

 protected:
  ItemId answer(const Assortment& a) override;

 private:
  std::shared_ptr<const Sampler> sampler_;
  Rng rng_;
};

/// Picks a stored list uniformly per query and applies the choice rule.
class DataOracle final : public ChoiceOracle {
 public:
  DataOracle(std::vector<TopKList> records, std::uint64_t seed);
  Universe universe() const override { return records_.front().universe(); }

 protected:
  ItemId answer(const Assortment& a) override;

 private:
  std::vector<TopKList> records_;
  Rng rng_;
};

/// Wraps an arbitrary rule; used for scripted and deterministic oracles.
class FunctionOracle final : public ChoiceOracle {
 public:
  using Rule = std::function<ItemId(const Assortment&, Rng&)>;
  FunctionOracle(Universe universe, Rule rule, std::uint64_t seed = 0)
      : universe_(universe), rule_(std::move(rule)), rng_(seed) {}
  Universe universe() const override { return universe_; }

 protected:
  ItemId answer(const Assortment& a) override { return rule_(a, rng_); }

 private:
  Universe universe_;
  Rule rule_;
  Rng rng_;
};

/// Signed pairwise win counts over the offered options (no-purchase first).
class ComparisonTally {
 public:
  explicit ComparisonTally(const Assortment& a);

  /// Throws ChoiceOutsideAssortment for ids that were not offered.
  void add(ItemId chosen);

  const std::vector<ItemId>& options() const noexcept { return options_; }
  std::uint64_t count() const noexcept { return m_; }
  std::int64_t x(std::size_t i, std::size_t j) const { return x_[i * options_.size() + j]; }
  double y(std::size_t i, std::size_t j) const {
    return m_ == 0 ? 0.0 : static_cast<double>(x(i, j)) / static_cast<double>(m_);
  }
  /// Sum of row i of the win-count matrix.
  std::int64_t row_sum(std::size_t i) const;
  std::size_t index_of(ItemId id) const;

  /// The option whose normalized lead over every other option exceeds
  /// 1 / (2 (|A| + 1)), if there is one.
  std::optional<ItemId> top() const;

 private:
  std::vector<ItemId> options_;
  std::vector<std::int64_t> x_;
  std::uint64_t m_ = 0;
};

std::optional<ItemId> find_top(const Assortment& a, std::span<const ItemId> choices);

/// Queries `m` choices on `a` and tallies them.
ComparisonTally query_tally(ChoiceOracle& oracle, const Assortment& a, std::uint64_t m);

enum class TournamentPolicy {
  kAbort,          // throw TournamentFailure after the retries
  kScoreFallback,  // keep the chunk member with the largest row sum
};

struct LearnOptions {
  std::size_t r = 5;
  std::uint64_t m = 100;
  std::size_t max_retries = 3;
  TournamentPolicy policy = TournamentPolicy::kAbort;
  /// Truncates the learned order to this many items; 0 keeps everything.
  std::size_t k_cap = 0;
};

struct LearnedCenter {
  std::vector<ItemId> order;
  std::vector<double> scores;  // tie-break score per entry of order
  std::uint64_t queries_used = 0;
  std::uint64_t find_top_calls = 0;
  std::uint64_t retries = 0;
  std::uint64_t fallbacks = 0;

  std::size_t k_hat() const noexcept { return order.size(); }
  /// Throws EmptyList when nothing was learned.
  TopKList tau_hat(Universe universe) const { return TopKList::make(order, universe); }
};

/// Orders center items by repeated tournaments. Items of `pool` must be
/// center members; `padding` fills assortments up to size r.
LearnedCenter sortcntr(std::span<const ItemId> pool, std::span<const ItemId> padding,
                       ChoiceOracle& oracle, const LearnOptions& options);

LearnedCenter bucchoi(ChoiceOracle& oracle, const LearnOptions& options);

LearnedCenter bucchoi2(ChoiceOracle& oracle, const LearnOptions& options);

}  // namespace topk
