#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "oracle.hpp"
#include "topkgmm/prim.hpp"

using namespace topk;

namespace {

TopKList L(std::initializer_list<ItemId> ids, std::size_t u) { return TopKList::make(ids, Universe(u)); }

struct Fit {
  double tv = 0.0;
  double max_z = 0.0;
};

// Empirical frequencies of `draw` against exact probabilities.
template <class Draw>
Fit compare(const std::map<std::vector<ItemId>, double>& exact, int n, Draw&& draw) {
  std::map<std::vector<ItemId>, int> counts;
  for (int i = 0; i < n; ++i) ++counts[draw().items()];
  Fit fit;
  for (const auto& [t, q] : exact) {
    const double c = counts.count(t) ? counts.at(t) : 0;
    fit.tv += std::abs(c / n - q) / 2;
    fit.max_z = std::max(fit.max_z, std::abs(oracle::z_score(c, n, q)));
  }
  for (const auto& [t, c] : counts)
    if (!exact.count(t)) fit.tv += static_cast<double>(c) / n / 2;
  return fit;
}

}  // namespace

TEST(InsertPosition, EmptyListAndZeroBeta) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(prim_insert_position(1.5, 2.0, 0, rng), 0u);
  const int n = 600'000;
  std::vector<int> counts(6, 0);
  for (int i = 0; i < n; ++i) ++counts[prim_insert_position(1.0, 0.0, 5, rng)];
  double stat = 0.0;
  for (int c : counts) stat += std::pow(c - n / 6.0, 2) / (n / 6.0);
  EXPECT_GT(oracle::chi_square_sf(stat, 5), 0.01);
}

TEST(InsertPosition, TwoSlotProbability) {
  Rng rng(4);
  const double beta = 0.8, w = 1.3;
  const int n = 1'000'000;
  int zero = 0;
  for (int i = 0; i < n; ++i) zero += prim_insert_position(w, beta, 1, rng) == 0;
  EXPECT_LT(std::abs(oracle::z_score(zero, n, 1.0 / (1.0 + std::exp(-beta * w)))), 3.0);
}

TEST(InsertPosition, GeometricLaw) {
  Rng rng(5);
  for (double x : {0.05, 0.7, 3.0}) {
    const std::size_t len = 7;
    const int n = 500'000;
    std::vector<int> counts(len + 1, 0);
    for (int i = 0; i < n; ++i) ++counts[prim_insert_position(x, 1.0, len, rng)];
    double z = 0.0;
    for (std::size_t j = 0; j <= len; ++j) z += std::exp(-x * static_cast<double>(j));
    double stat = 0.0;
    int df = -1;
    for (std::size_t j = 0; j <= len; ++j) {
      const double e = n * std::exp(-x * static_cast<double>(j)) / z;
      if (e < 5) continue;
      stat += std::pow(counts[j] - e, 2) / e;
      ++df;
    }
    EXPECT_GT(oracle::chi_square_sf(stat, df), 0.001) << x;
  }
}

TEST(SampleFillers, Basics) {
  Rng rng(6);
  const TopKList c = L({0, 1}, 4);
  EXPECT_TRUE(sample_fillers(Universe(4), 0, c, rng).empty());
  for (int i = 0; i < 20; ++i) {
    auto all = sample_fillers(Universe(9), 6, L({7, 2, 4}, 9), rng);
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, (std::vector<ItemId>{0, 1, 3, 5, 6, 8}));
  }
  try {
    sample_fillers(Universe(4), 3, c, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNotEnoughFillers);
  }
}

TEST(SampleFillers, SingleFillerIsFair) {
  Rng rng(7);
  const int n = 100'000;
  int two = 0;
  for (int i = 0; i < n; ++i) two += sample_fillers(Universe(4), 1, L({0, 1}, 4), rng)[0] == 2;
  EXPECT_LT(std::abs(oracle::z_score(two, n, 0.5)), 3.0);
}

TEST(SampleFillers, OrderedPairsAreUniform) {
  Rng rng(8);
  const TopKList c = L({1, 4}, 7);  // fillers from {0,2,3,5,6}: 20 ordered pairs
  const int n = 400'000;
  std::map<std::vector<ItemId>, int> counts;
  for (int i = 0; i < n; ++i) ++counts[sample_fillers(Universe(7), 2, c, rng)];
  ASSERT_EQ(counts.size(), 20u);
  double stat = 0.0;
  for (const auto& [t, k] : counts) stat += std::pow(k - n / 20.0, 2) / (n / 20.0);
  EXPECT_GT(oracle::chi_square_sf(stat, 19), 0.01);
}

TEST(PrimSample, FullProfileIsClassicInsertion) {
  // k = u: no fillers, every draw is a permutation of the center.
  const TopKGMM m = TopKGMM::with_unit_weights(L({0, 1, 2}, 3), 0.9, 1.0);
  Rng rng(9);
  const Fit fit = compare(oracle::pmf(3, {0, 1, 2}, 0.9, 1.0, {1, 1, 1, 1}), 300'000,
                          [&] { return prim_sample(m, Profile::full(3), rng); });
  EXPECT_LT(fit.tv, 0.01);
  EXPECT_LT(fit.max_z, 4.0);
}

TEST(PrimSample, InsertionRatio) {
  // Items {1..4} map to ids {0..3}; center (0,1), profile {1}.
  const double beta = 0.6, w1 = 1.4;
  const TopKGMM m(L({0, 1}, 4), beta, 1.0, {1.0, w1, 0.8});
  Rng rng(10);
  std::map<std::vector<ItemId>, int> counts;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    const TopKList t = prim_sample(m, Profile::from_ranks({1}), rng);
    ASSERT_EQ(profile_of(t, m.center()), Profile::from_ranks({1}));
    ++counts[t.items()];
  }
  const double q = std::exp(beta * w1) / (1.0 + std::exp(beta * w1));
  for (ItemId x : {2u, 3u}) {
    const double first = counts[{0, x}], second = counts[{x, 0}];
    EXPECT_LT(std::abs(oracle::z_score(first, first + second, q)), 3.0) << x;
  }
}

TEST(PrimSample, ConditionalLawWithinEachProfile) {
  const TopKGMM m(L({1, 3}, 5), 0.8, 0.7, {0.6, 1.2, 0.9});
  const auto exact = oracle::pmf(5, {1, 3}, 0.8, 0.7, {0.6, 1.2, 0.9});
  Rng rng(11);
  for (std::uint64_t mask = 0; mask < 4; ++mask) {
    const Profile s{mask};
    std::map<std::vector<ItemId>, double> cond;
    double z = 0.0;
    for (const auto& [t, pr] : exact)
      if (profile_of(TopKList::make(t, Universe(5)), m.center()) == s) {
        cond[t] = pr;
        z += pr;
      }
    for (auto& [t, pr] : cond) pr /= z;
    const Fit fit = compare(cond, 1'000'000, [&] { return prim_sample(m, s, rng); });
    EXPECT_LT(fit.tv, 0.01) << mask;
    EXPECT_LT(fit.max_z, 4.0) << mask;
  }
}

TEST(Sample, UniformAtZeroBeta) {
  const Sampler sampler(TopKGMM::with_unit_weights(L({0, 1}, 5), 0.0, 1.0));
  Rng rng(12);
  const int n = 1'000'000;
  std::map<std::vector<ItemId>, int> counts;
  for (int i = 0; i < n; ++i) ++counts[sampler.sample(rng).items()];
  ASSERT_EQ(counts.size(), 20u);
  double stat = 0.0;
  for (const auto& [t, c] : counts) stat += std::pow(c - n / 20.0, 2) / (n / 20.0);
  EXPECT_GT(oracle::chi_square_sf(stat, 19), 0.01);
}

TEST(Sample, MatchesExactPmf) {
  const TopKGMM m(L({0, 1, 2}, 6), 0.7, 0.5, {2, 2, 2, 2});
  const Sampler sampler(m);
  Rng rng(13);
  const Fit fit = compare(oracle::pmf(6, {0, 1, 2}, 0.7, 0.5, {2, 2, 2, 2}), 1'000'000,
                          [&] { return sampler.sample(rng); });
  EXPECT_LT(fit.tv, 0.01);
  EXPECT_LT(fit.max_z, 4.0);
}

TEST(Sample, SeededStreamsReplay) {
  const Sampler sampler(TopKGMM(L({4, 2, 7}, 10), 0.5, 0.8, {1, 2, 1, 0.5}));
  Rng a(21), b(21);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(sampler.sample(a), sampler.sample(b));
  const auto one = sampler.sample_batch(10'000, 99, 1);
  const auto many = sampler.sample_batch(10'000, 99, 3);
  EXPECT_EQ(one, many);
  EXPECT_NE(one, sampler.sample_batch(10'000, 100, 1));
  // One-off draws replay too.
  Rng c(5), d(5);
  EXPECT_EQ(sample(sampler.model(), c), sample(sampler.model(), d));
}

TEST(Sample, BatchFormat) {
  const Sampler sampler(TopKGMM::with_unit_weights(L({1, 2, 3, 4}, 9), 0.5, 1.0));
  const auto batch = sampler.sample_batch(10, 7);
  std::ostringstream out;
  write_sample_batch(out, batch, 9, 4, 7);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# topkgmm-samples u=9 k=4 seed=7");
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::set<int> ids;
    int id;
    while (row >> id) ids.insert(id);
    EXPECT_EQ(ids.size(), 4u);
    ++rows;
  }
  EXPECT_EQ(rows, 10);
}
