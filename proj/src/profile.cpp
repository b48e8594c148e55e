#include "topkgmm/profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace topk {

Profile Profile::from_ranks(const std::vector<std::size_t>& ranks) {
  Profile s;
  for (std::size_t r : ranks) {
    if (r == 0 || r > 64) throw Error(Errc::kInvalidArgument, "profile rank out of range");
    s.members |= std::uint64_t{1} << (r - 1);
  }
  return s;
}

std::vector<std::size_t> Profile::ranks() const {
  std::vector<std::size_t> out;
  out.reserve(ell());
  for (std::uint64_t m = members; m != 0; m &= m - 1)
    out.push_back(static_cast<std::size_t>(__builtin_ctzll(m)) + 1);
  return out;
}

bool is_feasible(Profile s, std::size_t u, std::size_t k) noexcept {
  if (k > kMaxProfileK || k > u) return false;
  if (k < 64 && (s.members >> k) != 0) return false;
  return k - s.ell() <= u - k;
}

namespace {

void require_feasible(Profile s, const TopKGMM& model) {
  if (model.k() > kMaxProfileK)
    throw Error(Errc::kProfileSpaceTooLarge, "k=" + std::to_string(model.k()) +
                                                 " exceeds the profile mask width");
  if (!is_feasible(s, model.u(), model.k()))
    throw Error(Errc::kInfeasibleProfile, "profile cannot be completed with u=" +
                                              std::to_string(model.u()) +
                                              ", k=" + std::to_string(model.k()));
}

}  // namespace

Profile profile_of(const TopKList& tau, const TopKList& center) {
  if (!(tau.universe() == center.universe()))
    throw Error(Errc::kUniverseMismatch, "tau and center use different universes");
  if (center.k() > kMaxProfileK)
    throw Error(Errc::kProfileSpaceTooLarge, "center too long for a profile mask");
  Profile s;
  for (ItemId id : tau.items()) {
    const std::size_t r = center.rank_of(id);
    if (r < center.k()) s.members |= std::uint64_t{1} << r;
  }
  return s;
}

double profile_f(Profile s, const TopKGMM& model) {
  require_feasible(s, model);
  const std::size_t k = model.k();
  const auto u = static_cast<double>(model.u());
  const auto ell = static_cast<double>(s.ell());
  const double kd = static_cast<double>(k);
  const double p = model.p();
  const double outside = kd - ell;
  double total = model.w0() * p * outside * (outside - 1.0) / 2.0;
  double seen_in = 0.0, seen_out = 0.0;
  for (std::size_t j = k; j >= 1; --j) {
    if (s.contains(j)) {
      seen_in += 1.0;
      continue;
    }
    const double inv = outside + seen_in;
    const double inc = (u - 2.0 * kd + ell) + seen_out;
    total += model.weight_at_rank(j) * (inv + p * inc);
    seen_out += 1.0;
  }
  return total;
}

double log_geometric_sum(double x, std::size_t len) {
  if (len == 0) return 0.0;
  if (x == 0.0) return std::log(static_cast<double>(len + 1));
  // (1 - e^{-x(len+1)}) / (1 - e^{-x})
  return std::log(-std::expm1(-x * static_cast<double>(len + 1))) - std::log(-std::expm1(-x));
}

double log_falling_factorial(std::size_t n, std::size_t m) {
  double total = 0.0;
  for (std::size_t t = 0; t < m; ++t) total += std::log(static_cast<double>(n - t));
  return total;
}

double log_profile_Z(Profile s, const TopKGMM& model) {
  require_feasible(s, model);
  const std::size_t k = model.k();
  const std::size_t m = k - s.ell();
  // C(u-k, m) m! = (u-k)! / (u-k-m)!
  double total = log_falling_factorial(model.u() - k, m);
  std::size_t j = 0;
  for (std::size_t rank : s.ranks()) {
    ++j;
    total += log_geometric_sum(model.beta() * model.weight_at_rank(rank), k - j);
  }
  return total;
}

double profile_Z(Profile s, const TopKGMM& model) { return std::exp(log_profile_Z(s, model)); }

std::uint64_t feasible_profile_count(std::size_t u, std::size_t k) {
  if (k > u) return 0;
  const std::size_t lo = 2 * k > u ? 2 * k - u : 0;
  // Binomials C(k, ell) built incrementally in long double, then saturated.
  long double binom = 1.0L, total = 0.0L;
  for (std::size_t ell = 0; ell <= k; ++ell) {
    if (ell > 0) binom = binom * static_cast<long double>(k - ell + 1) / static_cast<long double>(ell);
    if (ell >= lo) total += binom;
  }
  if (total >= 1.8e19L) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(total)));
}

ProfileDistribution profile_distribution(const TopKGMM& model, std::uint64_t cap) {
  const std::size_t u = model.u(), k = model.k();
  if (k > kMaxProfileK)
    throw Error(Errc::kProfileSpaceTooLarge, "k=" + std::to_string(k) + " exceeds the profile mask width");
  const std::uint64_t count = feasible_profile_count(u, k);
  if (count > cap)
    throw Error(Errc::kProfileSpaceTooLarge, std::to_string(count) +
                                                 " feasible profiles exceed the cap of " +
                                                 std::to_string(cap));

  ProfileDistribution dist;
  dist.u_ = u;
  dist.k_ = k;
  dist.profiles_.reserve(count);
  for_each_feasible_profile(u, k, [&](Profile s) { dist.profiles_.push_back(s); });
  std::sort(dist.profiles_.begin(), dist.profiles_.end(),
            [](Profile a, Profile b) { return a.members < b.members; });

  const std::size_t n = dist.profiles_.size();
  dist.log_weights_.resize(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Profile s = dist.profiles_[i];
    dist.log_weights_[i] = -model.beta() * profile_f(s, model) + log_profile_Z(s, model);
    top = std::max(top, dist.log_weights_[i]);
  }
  dist.probs_.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dist.probs_[i] = std::exp(dist.log_weights_[i] - top);
    total += dist.probs_[i];
  }
  dist.log_total_ = top + std::log(total);
  dist.cumulative_.resize(n);
  double running = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dist.probs_[i] /= total;
    running += dist.probs_[i];
    dist.cumulative_[i] = running;
  }
  return dist;
}

std::size_t ProfileDistribution::index_of(Profile s) const {
  const auto it = std::lower_bound(profiles_.begin(), profiles_.end(), s,
                                   [](Profile a, Profile b) { return a.members < b.members; });
  if (it == profiles_.end() || it->members != s.members) return profiles_.size();
  return static_cast<std::size_t>(it - profiles_.begin());
}

double ProfileDistribution::probability(Profile s) const {
  const std::size_t i = index_of(s);
  return i == profiles_.size() ? 0.0 : probs_[i];
}

Profile ProfileDistribution::sample(Rng& rng) const {
  // Scale by the last prefix so rounding in the running sum cannot leave a gap.
  const double target = rng.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  if (it == cumulative_.end()) --it;
  return profiles_[static_cast<std::size_t>(it - cumulative_.begin())];
}

}  // namespace topk
