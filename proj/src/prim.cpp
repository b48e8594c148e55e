#include "topkgmm/prim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <utility>

#include "topkgmm/parallel.hpp"

namespace topk {

std::size_t prim_insert_position(double weight, double beta, std::size_t list_len, Rng& rng) {
  if (list_len == 0) return 0;
  const double x = beta * weight;
  if (x == 0.0) return static_cast<std::size_t>(rng.below(list_len + 1));
  // Invert the truncated geometric CDF (1 - q^{j+1}) / (1 - q^{len+1}), q = e^{-x}.
  const double span = -std::expm1(-x * static_cast<double>(list_len + 1));
  const double t = -std::log1p(-rng.uniform() * span) / x;
  const double j = std::ceil(t) - 1.0;
  if (!(j > 0.0)) return 0;
  if (j >= static_cast<double>(list_len)) return list_len;
  return static_cast<std::size_t>(j);
}

namespace {

// The t-th smallest id outside the center, given the center ids ascending.
ItemId nth_outside(std::uint64_t t, std::span<const ItemId> sorted_center) {
  std::uint64_t id = t;
  for (ItemId c : sorted_center) {
    if (c <= id) ++id;
    else break;
  }
  return static_cast<ItemId>(id);
}

std::vector<ItemId> draw_fillers(std::size_t u, std::size_t count,
                                 std::span<const ItemId> sorted_center, Rng& rng) {
  const std::uint64_t pool = u - sorted_center.size();
  std::vector<ItemId> out;
  out.reserve(count);
  // Partial Fisher-Yates over [0, pool) with the displaced slots kept sparse.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> moved;
  auto value_at = [&](std::uint64_t slot) {
    for (const auto& [s, v] : moved)
      if (s == slot) return v;
    return slot;
  };
  auto store = [&](std::uint64_t slot, std::uint64_t value) {
    for (auto& [s, v] : moved)
      if (s == slot) {
        v = value;
        return;
      }
    moved.emplace_back(slot, value);
  };
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t j = i + rng.below(pool - i);
    const std::uint64_t vi = value_at(i), vj = value_at(j);
    store(j, vi);
    out.push_back(nth_outside(vj, sorted_center));
  }
  return out;
}

std::vector<ItemId> sorted_ids(const TopKList& center) {
  std::vector<ItemId> ids = center.items();
  std::sort(ids.begin(), ids.end());
  return ids;
}

TopKList insert_members(const TopKGMM& model, Profile s, std::vector<ItemId> list, Rng& rng) {
  const std::vector<std::size_t> ranks = s.ranks();
  list.reserve(model.k());
  for (auto it = ranks.rbegin(); it != ranks.rend(); ++it) {
    const std::size_t pos =
        prim_insert_position(model.weight_at_rank(*it), model.beta(), list.size(), rng);
    list.insert(list.begin() + static_cast<std::ptrdiff_t>(pos), model.center()[*it - 1]);
  }
  return TopKList::trusted(std::move(list), model.universe());
}

void require_feasible(Profile s, const TopKGMM& model) {
  if (!is_feasible(s, model.u(), model.k()))
    throw Error(Errc::kInfeasibleProfile, "profile cannot be completed with u=" +
                                              std::to_string(model.u()) +
                                              ", k=" + std::to_string(model.k()));
}

}  // namespace

std::vector<ItemId> sample_fillers(Universe universe, std::size_t count, const TopKList& center,
                                   Rng& rng) {
  if (!(universe == center.universe()))
    throw Error(Errc::kUniverseMismatch, "center uses a different universe");
  if (count > universe.size() - center.k())
    throw Error(Errc::kNotEnoughFillers, std::to_string(count) + " fillers requested, " +
                                             std::to_string(universe.size() - center.k()) +
                                             " available");
  const std::vector<ItemId> ids = sorted_ids(center);
  return draw_fillers(universe.size(), count, ids, rng);
}

TopKList prim_sample(const TopKGMM& model, Profile s, Rng& rng) {
  require_feasible(s, model);
  const std::vector<ItemId> ids = sorted_ids(model.center());
  return insert_members(model, s, draw_fillers(model.u(), model.k() - s.ell(), ids, rng), rng);
}

Sampler::Sampler(TopKGMM model, std::uint64_t profile_cap)
    : model_(std::move(model)),
      dist_(profile_distribution(model_, profile_cap)),
      sorted_center_(sorted_ids(model_.center())) {}

TopKList Sampler::sample_in(Profile s, Rng& rng) const {
  require_feasible(s, model_);
  return insert_members(model_, s,
                        draw_fillers(model_.u(), model_.k() - s.ell(), sorted_center_, rng), rng);
}

TopKList Sampler::sample(Rng& rng) const {
  const Profile s = dist_.sample(rng);
  return insert_members(model_, s,
                        draw_fillers(model_.u(), model_.k() - s.ell(), sorted_center_, rng), rng);
}

std::vector<TopKList> Sampler::sample_batch(std::size_t count, std::uint64_t seed,
                                            std::size_t threads) const {
  std::vector<TopKList> out(count);
  const std::size_t blocks = (count + kBatchBlock - 1) / kBatchBlock;
  parallel_for(
      blocks,
      [&](std::size_t b) {
        Rng rng(stream_seed(seed, b));
        const std::size_t end = std::min(count, (b + 1) * kBatchBlock);
        for (std::size_t i = b * kBatchBlock; i < end; ++i) out[i] = sample(rng);
      },
      threads);
  return out;
}

TopKList sample(const TopKGMM& model, Rng& rng) { return Sampler(model).sample(rng); }

void write_sample_batch(std::ostream& out, std::span<const TopKList> batch, std::size_t u,
                        std::size_t k, std::uint64_t seed) {
  out << "# topkgmm-samples u=" << u << " k=" << k << " seed=" << seed << '\n';
  for (const TopKList& tau : batch) {
    for (std::size_t i = 0; i < tau.k(); ++i) out << (i ? " " : "") << tau[i];
    out << '\n';
  }
}

}  // namespace topk
