#include "topkgmm/learn.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

namespace topk {

ModelOracle::ModelOracle(std::shared_ptr<const Sampler> sampler, std::uint64_t seed)
    : sampler_(std::move(sampler)), rng_(seed) {}

ModelOracle::ModelOracle(const TopKGMM& model, std::uint64_t seed)
    : ModelOracle(std::make_shared<const Sampler>(model), seed) {}

ItemId ModelOracle::answer(const Assortment& a) { return choice(sampler_->sample(rng_), a, rng_); }

DataOracle::DataOracle(std::vector<TopKList> records, std::uint64_t seed)
    : records_(std::move(records)), rng_(seed) {
  if (records_.empty()) throw Error(Errc::kEmptyDataset, "data oracle needs at least one record");
}

ItemId DataOracle::answer(const Assortment& a) {
  const TopKList& tau = records_[rng_.below(records_.size())];
  return choice(tau, a, rng_);
}

ComparisonTally::ComparisonTally(const Assortment& a)
    : options_(a.with_null()), x_(options_.size() * options_.size(), 0) {}

std::size_t ComparisonTally::index_of(ItemId id) const {
  if (id == kNoPurchase) return 0;
  const auto it = std::lower_bound(options_.begin() + 1, options_.end(), id);
  if (it == options_.end() || *it != id) return options_.size();
  return static_cast<std::size_t>(it - options_.begin());
}

void ComparisonTally::add(ItemId chosen) {
  const std::size_t c = index_of(chosen);
  const std::size_t n = options_.size();
  if (c == n)
    throw Error(Errc::kChoiceOutsideAssortment, "item " + std::to_string(chosen) + " was not offered");
  for (std::size_t a = 0; a < n; ++a) {
    if (a == c) continue;
    x_[c * n + a] += 1;
    x_[a * n + c] -= 1;
  }
  ++m_;
}

std::int64_t ComparisonTally::row_sum(std::size_t i) const {
  const std::size_t n = options_.size();
  return std::accumulate(x_.begin() + static_cast<std::ptrdiff_t>(i * n),
                         x_.begin() + static_cast<std::ptrdiff_t>((i + 1) * n), std::int64_t{0});
}

std::optional<ItemId> ComparisonTally::top() const {
  const std::size_t n = options_.size();
  if (m_ == 0) return std::nullopt;
  const double threshold = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t a = 0; a < n; ++a) {
    bool leads = true;
    for (std::size_t b = 0; b < n && leads; ++b)
      if (b != a && !(y(a, b) > threshold)) leads = false;
    // Antisymmetry makes a leader unique.
    if (leads) return options_[a];
  }
  return std::nullopt;
}

std::optional<ItemId> find_top(const Assortment& a, std::span<const ItemId> choices) {
  ComparisonTally tally(a);
  for (ItemId c : choices) tally.add(c);
  return tally.top();
}

ComparisonTally query_tally(ChoiceOracle& oracle, const Assortment& a, std::uint64_t m) {
  ComparisonTally tally(a);
  for (std::uint64_t t = 0; t < m; ++t) tally.add(oracle.query(a));
  return tally;
}

namespace {

void check_options(const LearnOptions& options) {
  if (options.r == 0) throw Error(Errc::kInvalidArgument, "r must be at least 1");
  if (options.m == 0) throw Error(Errc::kInvalidArgument, "m must be at least 1");
}

// Fills `chosen` up to r items from the lowest ids of `padding` not already in it.
std::vector<ItemId> padded(std::vector<ItemId> chosen, std::span<const ItemId> padding, std::size_t r) {
  for (ItemId id : padding) {
    if (chosen.size() >= r) break;
    if (std::find(chosen.begin(), chosen.end(), id) == chosen.end()) chosen.push_back(id);
  }
  return chosen;
}

struct Bout {
  ItemId winner;
  double score;
};

// One tournament round on `chunk`: retries with doubled m, then applies the policy.
Bout play(std::span<const ItemId> chunk, std::span<const ItemId> padding, ChoiceOracle& oracle,
          const LearnOptions& options, LearnedCenter& stats) {
  const Universe universe = oracle.universe();
  const Assortment a = Assortment::make(
      padded(std::vector<ItemId>(chunk.begin(), chunk.end()), padding, options.r), universe);
  std::uint64_t m = options.m;
  for (std::size_t attempt = 0;; ++attempt) {
    const ComparisonTally tally = query_tally(oracle, a, m);
    ++stats.find_top_calls;
    const std::optional<ItemId> top = tally.top();
    if (top && std::find(chunk.begin(), chunk.end(), *top) != chunk.end())
      return {*top, static_cast<double>(tally.row_sum(tally.index_of(*top))) / static_cast<double>(m)};
    if (attempt < options.max_retries) {
      ++stats.retries;
      m *= 2;
      continue;
    }
    if (options.policy == TournamentPolicy::kAbort) {
      std::string ids;
      for (ItemId id : a.items()) ids += (ids.empty() ? "" : ",") + std::to_string(id);
      throw Error(Errc::kTournamentFailure, "no winner on {" + ids + "} after " +
                                                std::to_string(options.max_retries) +
                                                " retries (last m=" + std::to_string(m) + ")");
    }
    ++stats.fallbacks;
    Bout best{chunk.front(), -1e300};
    for (ItemId id : chunk) {
      const double s = static_cast<double>(tally.row_sum(tally.index_of(id))) / static_cast<double>(m);
      if (s > best.score) best = {id, s};
    }
    return best;
  }
}

}  // namespace

LearnedCenter sortcntr(std::span<const ItemId> pool, std::span<const ItemId> padding,
                       ChoiceOracle& oracle, const LearnOptions& options) {
  check_options(options);
  const std::uint64_t start = oracle.queries();
  LearnedCenter out;
  std::vector<ItemId> remaining(pool.begin(), pool.end());
  std::sort(remaining.begin(), remaining.end());
  std::vector<ItemId> pad(padding.begin(), padding.end());
  std::sort(pad.begin(), pad.end());
  // Tournaments need at least two entrants per assortment.
  const std::size_t width = std::max<std::size_t>(options.r, 2);

  while (!remaining.empty()) {
    Bout champion{remaining.front(), 0.0};
    std::vector<ItemId> field = remaining;
    while (field.size() > 1) {
      std::vector<ItemId> next;
      std::vector<double> next_scores;
      for (std::size_t at = 0; at < field.size(); at += width) {
        const std::size_t len = std::min(width, field.size() - at);
        const std::span<const ItemId> chunk(field.data() + at, len);
        if (len == 1) {
          next.push_back(chunk.front());
          continue;
        }
        const Bout b = play(chunk, pad, oracle, options, out);
        next.push_back(b.winner);
        champion = b;
      }
      field = std::move(next);
    }
    champion.winner = field.front();
    out.order.push_back(champion.winner);
    out.scores.push_back(champion.score);
    remaining.erase(std::find(remaining.begin(), remaining.end(), champion.winner));
  }
  if (options.k_cap != 0 && out.order.size() > options.k_cap) {
    out.order.resize(options.k_cap);
    out.scores.resize(options.k_cap);
  }
  out.queries_used = oracle.queries() - start;
  return out;
}

LearnedCenter bucchoi(ChoiceOracle& oracle, const LearnOptions& options) {
  check_options(options);
  const Universe universe = oracle.universe();
  const std::uint64_t start = oracle.queries();
  std::set<ItemId> unknown;
  for (std::size_t id = 1; id < universe.size(); ++id) unknown.insert(static_cast<ItemId>(id));
  std::vector<ItemId> found, rejected;  // rejected is kept ascending
  std::uint64_t calls = 0;

  while (!unknown.empty()) {
    std::vector<ItemId> fresh;
    for (auto it = unknown.begin(); it != unknown.end() && fresh.size() < options.r; ++it)
      fresh.push_back(*it);
    const Assortment a = Assortment::make(padded(fresh, rejected, options.r), universe);
    const ComparisonTally tally = query_tally(oracle, a, options.m);
    ++calls;
    const std::optional<ItemId> top = tally.top();
    if (top && std::find(fresh.begin(), fresh.end(), *top) != fresh.end()) {
      found.push_back(*top);
      unknown.erase(*top);
    } else {
      // No winner, or the winner is the no-purchase option or padding.
      for (ItemId id : fresh) {
        unknown.erase(id);
        rejected.insert(std::upper_bound(rejected.begin(), rejected.end(), id), id);
      }
    }
  }

  LearnedCenter out = sortcntr(found, rejected, oracle, options);
  out.find_top_calls += calls;
  out.queries_used = oracle.queries() - start;
  return out;
}

LearnedCenter bucchoi2(ChoiceOracle& oracle, const LearnOptions& options) {
  check_options(options);
  const Universe universe = oracle.universe();
  const std::uint64_t start = oracle.queries();
  LearnedCenter out;

  std::vector<ItemId> members;
  for (std::size_t id = 1; id < universe.size(); ++id) {
    const auto item = static_cast<ItemId>(id);
    const ComparisonTally tally = query_tally(oracle, Assortment::make({item}, universe), options.m);
    ++out.find_top_calls;
    if (tally.top() == item) members.push_back(item);
  }

  const std::size_t t = members.size();
  std::vector<std::size_t> wins(t, 0);
  std::vector<double> score(t, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = i + 1; j < t; ++j) {
      const Assortment a = Assortment::make({members[i], members[j]}, universe);
      const ComparisonTally tally = query_tally(oracle, a, options.m);
      ++out.find_top_calls;
      const std::optional<ItemId> top = tally.top();
      if (top == members[i]) ++wins[i];
      if (top == members[j]) ++wins[j];
      const double m = static_cast<double>(tally.count());
      score[i] += static_cast<double>(tally.row_sum(tally.index_of(members[i]))) / m;
      score[j] += static_cast<double>(tally.row_sum(tally.index_of(members[j]))) / m;
    }
  }

  std::vector<std::size_t> idx(t);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (wins[a] != wins[b]) return wins[a] > wins[b];
    if (score[a] != score[b]) return score[a] > score[b];
    return members[a] < members[b];
  });
  for (std::size_t i : idx) {
    out.order.push_back(members[i]);
    out.scores.push_back(score[i]);
  }
  if (options.k_cap != 0 && out.order.size() > options.k_cap) {
    out.order.resize(options.k_cap);
    out.scores.resize(options.k_cap);
  }
  out.queries_used = oracle.queries() - start;
  return out;
}

}  // namespace topk
