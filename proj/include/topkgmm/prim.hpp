#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "topkgmm/core.hpp"
#include "topkgmm/profile.hpp"
#include "topkgmm/random.hpp"

namespace topk {

/// Position in [0, list_len] with mass proportional to exp(-beta * weight * j).
/// j is the number of existing elements that end up in front of the new one.
std::size_t prim_insert_position(double weight, double beta, std::size_t list_len, Rng& rng);

/// Uniform ordered draw of `count` distinct items outside the center.
std::vector<ItemId> sample_fillers(Universe universe, std::size_t count, const TopKList& center,
                                   Rng& rng);

/// Draws a list from the model conditioned on its profile being `s`.
TopKList prim_sample(const TopKGMM& model, Profile s, Rng& rng);

/// Model plus precomputed profile table. Immutable and shareable; each thread
/// brings its own Rng.
class Sampler {
 public:
  explicit Sampler(TopKGMM model, std::uint64_t profile_cap = kDefaultProfileCap);

  const TopKGMM& model() const noexcept { return model_; }
  const ProfileDistribution& profiles() const noexcept { return dist_; }

  TopKList sample(Rng& rng) const;
  TopKList sample_in(Profile s, Rng& rng) const;

  /// `count` samples. Block b of kBatchBlock samples uses stream b of `seed`,
  /// so the output does not depend on the thread count.
  std::vector<TopKList> sample_batch(std::size_t count, std::uint64_t seed,
                                     std::size_t threads = 0) const;

  static constexpr std::size_t kBatchBlock = 4096;

 private:
  TopKGMM model_;
  ProfileDistribution dist_;
  std::vector<ItemId> sorted_center_;
};

/// One-off draw; builds the profile table on every call.
TopKList sample(const TopKGMM& model, Rng& rng);

/// `# topkgmm-samples u=<u> k=<k> seed=<seed>` then one list per line.
void write_sample_batch(std::ostream& out, std::span<const TopKList> batch, std::size_t u,
                        std::size_t k, std::uint64_t seed);

}  // namespace topk
