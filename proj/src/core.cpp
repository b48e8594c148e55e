#include "topkgmm/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace topk {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kDuplicateItem: return "DuplicateItem";
    case Errc::kItemOutOfRange: return "ItemOutOfRange";
    case Errc::kEmptyList: return "EmptyList";
    case Errc::kKExceedsUniverse: return "KExceedsUniverse";
    case Errc::kUniverseMismatch: return "UniverseMismatch";
    case Errc::kSizeMismatch: return "SizeMismatch";
    case Errc::kInvalidModel: return "InvalidModel";
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kInstanceTooLarge: return "InstanceTooLarge";
    case Errc::kInfeasibleProfile: return "InfeasibleProfile";
    case Errc::kProfileSpaceTooLarge: return "ProfileSpaceTooLarge";
    case Errc::kNotEnoughFillers: return "NotEnoughFillers";
    case Errc::kInvalidAssortment: return "InvalidAssortment";
    case Errc::kMissingScore: return "MissingScore";
    case Errc::kDegenerateLog: return "DegenerateLog";
    case Errc::kNonConvergence: return "NonConvergence";
    case Errc::kChoiceOutsideAssortment: return "ChoiceOutsideAssortment";
    case Errc::kOracleFailure: return "OracleFailure";
    case Errc::kPaddingExhausted: return "PaddingExhausted";
    case Errc::kTournamentFailure: return "TournamentFailure";
    case Errc::kEmptyDataset: return "EmptyDataset";
    case Errc::kMalformedLine: return "MalformedLine";
    case Errc::kInconsistentK: return "InconsistentK";
    case Errc::kTooFewRecords: return "TooFewRecords";
    case Errc::kMalformed: return "Malformed";
    case Errc::kVersionMismatch: return "VersionMismatch";
    case Errc::kIo: return "Io";
  }
  return "Unknown";
}

Universe::Universe(std::size_t size, bool has_null) : size_(size), has_null_(has_null) {
  if (size < 2) throw Error(Errc::kInvalidArgument, "universe needs at least 2 items");
}

TopKList TopKList::make(std::span<const ItemId> items, Universe universe) {
  if (items.empty()) throw Error(Errc::kEmptyList, "top-k list is empty");
  if (items.size() > universe.size())
    throw Error(Errc::kKExceedsUniverse, "k=" + std::to_string(items.size()) +
                                             " exceeds u=" + std::to_string(universe.size()));
  std::vector<bool> seen(universe.size(), false);
  for (ItemId id : items) {
    if (!universe.contains(id))
      throw Error(Errc::kItemOutOfRange, "item " + std::to_string(id) + " not below u=" +
                                             std::to_string(universe.size()));
    if (seen[id]) throw Error(Errc::kDuplicateItem, "item " + std::to_string(id) + " repeated");
    seen[id] = true;
  }
  return trusted(std::vector<ItemId>(items.begin(), items.end()), universe);
}

std::size_t TopKList::rank_of(ItemId id) const noexcept {
  const auto it = std::find(items_.begin(), items_.end(), id);
  return static_cast<std::size_t>(it - items_.begin());
}

TopKGMM::TopKGMM(TopKList center, double beta, double p, std::vector<double> weights)
    : center_(std::move(center)), beta_(beta), p_(p), weights_(std::move(weights)) {
  if (center_.k() == 0) throw Error(Errc::kInvalidModel, "center is empty");
  if (weights_.size() != center_.k() + 1)
    throw Error(Errc::kInvalidModel, "expected " + std::to_string(center_.k() + 1) +
                                         " weights, got " + std::to_string(weights_.size()));
  if (!(beta_ >= 0.0) || !std::isfinite(beta_))
    throw Error(Errc::kInvalidModel, "beta must be finite and non-negative");
  if (!(p_ > 0.0) || !std::isfinite(p_))
    throw Error(Errc::kInvalidModel, "p must be finite and positive");
  for (double w : weights_)
    if (!(w >= 0.0) || !std::isfinite(w))
      throw Error(Errc::kInvalidModel, "weights must be finite and non-negative");
}

TopKGMM TopKGMM::with_unit_weights(TopKList center, double beta, double p) {
  const std::size_t k = center.k();
  return TopKGMM(std::move(center), beta, p, std::vector<double>(k + 1, 1.0));
}

double TopKGMM::min_center_weight() const {
  return *std::min_element(weights_.begin() + 1, weights_.end());
}

namespace {

void require_same_universe(const TopKList& a, const TopKList& b) {
  if (!(a.universe() == b.universe()))
    throw Error(Errc::kUniverseMismatch, "lists over u=" + std::to_string(a.universe().size()) +
                                             " and u=" + std::to_string(b.universe().size()));
}

}  // namespace

double kendall_p_distance(const TopKList& a, const TopKList& b, double p) {
  require_same_universe(a, b);
  std::vector<ItemId> items(a.items());
  for (ItemId id : b.items())
    if (!a.contains(id)) items.push_back(id);

  const std::size_t n = items.size();
  std::vector<std::size_t> ra(n), rb(n);
  for (std::size_t i = 0; i < n; ++i) {
    ra[i] = a.rank_of(items[i]);
    rb[i] = b.rank_of(items[i]);
  }
  const std::size_t ka = a.k(), kb = b.k();
  double opposite = 0.0, half = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // A pair is ordered by a list unless both items are missing from it.
      const bool in_a = ra[i] < ka || ra[j] < ka;
      const bool in_b = rb[i] < kb || rb[j] < kb;
      if (in_a && in_b) {
        if ((ra[i] < ra[j]) != (rb[i] < rb[j])) opposite += 1.0;
      } else if (in_a != in_b) {
        half += 1.0;
      }
    }
  }
  return opposite + p * half;
}

InversionVectors inversion_vectors(const TopKList& tau, const TopKList& center) {
  require_same_universe(tau, center);
  if (tau.k() != center.k())
    throw Error(Errc::kSizeMismatch, "tau has k=" + std::to_string(tau.k()) +
                                         ", center has k=" + std::to_string(center.k()));
  const std::size_t k = center.k();
  const auto u = static_cast<std::int64_t>(center.universe().size());

  // Center rank of each tau position (k when not a center item), and
  // tau rank of each center item (k when unranked).
  std::vector<std::size_t> center_rank_at(k), tau_rank_of(k);
  std::int64_t ell = 0;
  for (std::size_t t = 0; t < k; ++t) center_rank_at[t] = center.rank_of(tau[t]);
  for (std::size_t i = 0; i < k; ++i) {
    tau_rank_of[i] = tau.rank_of(center[i]);
    if (tau_rank_of[i] < k) ++ell;
  }
  const std::int64_t missing_fillers = (u - static_cast<std::int64_t>(k)) -
                                       (static_cast<std::int64_t>(k) - ell);

  InversionVectors out;
  out.inversions.assign(k, 0);
  out.incomparables.assign(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t limit = std::min(tau_rank_of[i], k);
    std::int64_t above = 0;
    for (std::size_t t = 0; t < limit; ++t)
      if (center_rank_at[t] > i) ++above;
    out.inversions[i] = above;
    if (tau_rank_of[i] == k) {
      std::int64_t lower_missing = 0;
      for (std::size_t j = i + 1; j < k; ++j)
        if (tau_rank_of[j] == k) ++lower_missing;
      out.incomparables[i] = lower_missing + missing_fillers;
    }
  }
  const std::int64_t outside = static_cast<std::int64_t>(k) - ell;
  out.outside_pairs = outside * (outside - 1) / 2;
  return out;
}

double weighted_displacement(const TopKList& tau, const TopKGMM& model) {
  const InversionVectors v = inversion_vectors(tau, model.center());
  const double p = model.p();
  double total = model.w0() * p * static_cast<double>(v.outside_pairs);
  for (std::size_t i = 0; i < model.k(); ++i)
    total += model.weights()[i + 1] *
             (static_cast<double>(v.inversions[i]) + p * static_cast<double>(v.incomparables[i]));
  return total;
}

double unnormalized_mass(const TopKList& tau, const TopKGMM& model) {
  return std::exp(-model.beta() * weighted_displacement(tau, model));
}

std::uint64_t count_topk_lists(std::size_t u, std::size_t k) {
  if (k > u) return 0;
  std::uint64_t count = 1;
  for (std::size_t t = 0; t < k; ++t) {
    const std::uint64_t factor = u - t;
    if (count > std::numeric_limits<std::uint64_t>::max() / factor)
      return std::numeric_limits<std::uint64_t>::max();
    count *= factor;
  }
  return count;
}

void for_each_topk_list(Universe universe, std::size_t k,
                        const std::function<void(const TopKList&)>& visit, std::uint64_t cap) {
  const std::size_t u = universe.size();
  if (k == 0) throw Error(Errc::kEmptyList, "k must be positive");
  if (k > u) throw Error(Errc::kKExceedsUniverse, "k exceeds u");
  const std::uint64_t count = count_topk_lists(u, k);
  if (count > cap)
    throw Error(Errc::kInstanceTooLarge, std::to_string(count) + " lists exceed the cap of " +
                                             std::to_string(cap));

  std::vector<ItemId> items(k);
  std::vector<bool> used(u, false);
  std::vector<std::size_t> next(k, 0);
  std::size_t depth = 0;
  // Iterative depth-first walk; next[d] is the next candidate id at depth d.
  while (true) {
    if (depth == k) {
      visit(TopKList::trusted(items, universe));
      --depth;
      used[items[depth]] = false;
      continue;
    }
    std::size_t c = next[depth];
    while (c < u && used[c]) ++c;
    if (c == u) {
      next[depth] = 0;
      if (depth == 0) break;
      --depth;
      used[items[depth]] = false;
      continue;
    }
    items[depth] = static_cast<ItemId>(c);
    used[c] = true;
    next[depth] = c + 1;
    ++depth;
  }
}

std::vector<TopKList> enumerate_all(Universe universe, std::size_t k, std::uint64_t cap) {
  std::vector<TopKList> out;
  out.reserve(count_topk_lists(universe.size(), k) <= cap ? count_topk_lists(universe.size(), k) : 0);
  for_each_topk_list(universe, k, [&](const TopKList& t) { out.push_back(t); }, cap);
  return out;
}

namespace {

bool encode(const TopKList& tau, std::size_t u, std::uint64_t& key) {
  key = 0;
  for (ItemId id : tau.items()) {
    if (key > (std::numeric_limits<std::uint64_t>::max() - id) / u) return false;
    key = key * u + id;
  }
  return true;
}

}  // namespace

ExactPmf ExactPmf::compute(const TopKGMM& model, std::uint64_t cap) {
  ExactPmf pmf;
  pmf.u_ = model.u();
  std::vector<double> log_mass;
  for_each_topk_list(
      model.universe(), model.k(),
      [&](const TopKList& tau) {
        pmf.entries_.emplace_back(tau, 0.0);
        log_mass.push_back(-model.beta() * weighted_displacement(tau, model));
      },
      cap);

  const double top = *std::max_element(log_mass.begin(), log_mass.end());
  double total = 0.0;
  for (std::size_t i = 0; i < log_mass.size(); ++i) {
    pmf.entries_[i].second = std::exp(log_mass[i] - top);
    total += pmf.entries_[i].second;
  }
  for (auto& e : pmf.entries_) e.second /= total;

  pmf.index_.reserve(pmf.entries_.size());
  for (std::size_t i = 0; i < pmf.entries_.size(); ++i) {
    std::uint64_t key;
    if (!encode(pmf.entries_[i].first, pmf.u_, key))
      throw Error(Errc::kInstanceTooLarge, "list index does not fit 64 bits");
    pmf.index_.emplace(key, i);
  }
  return pmf;
}

std::size_t ExactPmf::index_of(const TopKList& tau) const {
  if (entries_.empty() || tau.universe().size() != u_ || tau.k() != entries_.front().first.k())
    return entries_.size();
  std::uint64_t key;
  if (!encode(tau, u_, key)) return entries_.size();
  const auto it = index_.find(key);
  return it == index_.end() ? entries_.size() : it->second;
}

double ExactPmf::probability(const TopKList& tau) const {
  const std::size_t i = index_of(tau);
  return i == entries_.size() ? 0.0 : entries_[i].second;
}

}  // namespace topk
