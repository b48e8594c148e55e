#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "topkgmm/core.hpp"
#include "topkgmm/random.hpp"

namespace topk {

inline constexpr std::uint64_t kDefaultProfileCap = std::uint64_t{1} << 26;
inline constexpr std::size_t kMaxProfileK = 63;

/// Subset of center ranks present in a sample. Bit r-1 stands for rank r.
struct Profile {
  std::uint64_t members = 0;

  static Profile from_ranks(const std::vector<std::size_t>& ranks);  // 1-based
  static Profile full(std::size_t k) {
    return Profile{k == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << k) - 1};
  }

  std::size_t ell() const noexcept { return static_cast<std::size_t>(__builtin_popcountll(members)); }
  bool contains(std::size_t rank) const noexcept { return (members >> (rank - 1)) & 1U; }
  /// Member ranks, ascending, 1-based.
  std::vector<std::size_t> ranks() const;

  friend bool operator==(Profile a, Profile b) noexcept { return a.members == b.members; }
};

/// A profile is feasible when the unranked center slots can be filled from
/// the items outside the center.
bool is_feasible(Profile s, std::size_t u, std::size_t k) noexcept;

Profile profile_of(const TopKList& tau, const TopKList& center);

double profile_f(Profile s, const TopKGMM& model);

/// log of the number-weighted within-profile partition function.
double log_profile_Z(Profile s, const TopKGMM& model);
double profile_Z(Profile s, const TopKGMM& model);

/// log of sum_{r=0}^{len} exp(-x r), x >= 0.
double log_geometric_sum(double x, std::size_t len);

/// log(n! / (n-m)!)
double log_falling_factorial(std::size_t n, std::size_t m);

class ProfileDistribution {
 public:
  std::size_t size() const noexcept { return profiles_.size(); }
  std::size_t u() const noexcept { return u_; }
  std::size_t k() const noexcept { return k_; }

  /// Profiles in ascending mask order.
  const std::vector<Profile>& profiles() const noexcept { return profiles_; }
  /// log(e^{-beta f(S)} Z(S)).
  const std::vector<double>& log_weights() const noexcept { return log_weights_; }
  const std::vector<double>& probabilities() const noexcept { return probs_; }
  const std::vector<double>& cumulative() const noexcept { return cumulative_; }
  /// log of the sum of all weights, i.e. the model's log normalizer.
  double log_total() const noexcept { return log_total_; }

  /// 0 for infeasible or unknown profiles.
  double probability(Profile s) const;
  std::size_t index_of(Profile s) const;

  Profile sample(Rng& rng) const;

 private:
  friend ProfileDistribution profile_distribution(const TopKGMM&, std::uint64_t);
  std::size_t u_ = 0, k_ = 0;
  std::vector<Profile> profiles_;
  std::vector<double> log_weights_, probs_, cumulative_;
  double log_total_ = 0.0;
};

/// Number of feasible profiles for (u, k), saturating.
std::uint64_t feasible_profile_count(std::size_t u, std::size_t k);

ProfileDistribution profile_distribution(const TopKGMM& model,
                                         std::uint64_t cap = kDefaultProfileCap);

inline Profile sample_profile(const ProfileDistribution& dist, Rng& rng) { return dist.sample(rng); }

/// Calls visit(mask) for every feasible profile with ell in [lo, k], grouped by
/// ell and ascending within a group.
template <class Visit>
void for_each_feasible_profile(std::size_t u, std::size_t k, Visit&& visit) {
  const std::size_t lo = 2 * k > u ? 2 * k - u : 0;
  const std::uint64_t limit = k == 64 ? 0 : std::uint64_t{1} << k;
  for (std::size_t ell = lo; ell <= k; ++ell) {
    if (ell == 0) {
      visit(Profile{0});
      continue;
    }
    std::uint64_t x = ell == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << ell) - 1;
    while (true) {
      visit(Profile{x});
      if (ell == k) break;
      // Next mask with the same popcount.
      const std::uint64_t c = x & (~x + 1);
      const std::uint64_t r = x + c;
      x = (((r ^ x) >> 2) / c) | r;
      if (x >= limit) break;
    }
  }
}

}  // namespace topk
