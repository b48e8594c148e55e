#include "topkgmm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <ostream>

#include "topkgmm/choice.hpp"
#include "topkgmm/prim.hpp"

namespace topk {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Keeps results observable so the timed work is not optimized away.
volatile std::uint64_t g_sink = 0;

}  // namespace

TopKGMM bench_model(std::size_t n, std::size_t k, double beta, double p) {
  std::vector<ItemId> center(k);
  std::iota(center.begin(), center.end(), ItemId{1});
  return TopKGMM::with_unit_weights(TopKList::make(center, Universe(n + 1, true)), beta, p);
}

BenchRow bench_cell(std::size_t n, std::size_t k, const BenchSettings& settings) {
  const TopKGMM model = bench_model(n, k, settings.beta, settings.p);
  BenchRow row{n, k, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
               0.0};
  // Short builds are repeated until a repeat spans at least 10 ms.
  for (std::size_t rep = 0; rep < std::max<std::size_t>(1, settings.repeats); ++rep) {
    const auto start = Clock::now();
    std::size_t builds = 0;
    double elapsed = 0.0;
    do {
      const ProfileDistribution dist = profile_distribution(model);
      g_sink = g_sink + dist.size();
      ++builds;
      elapsed = seconds_since(start);
    } while (elapsed < 0.01);
    row.preprocess_s = std::min(row.preprocess_s, elapsed / static_cast<double>(builds));
  }

  const Sampler sampler(model);
  for (std::size_t rep = 0; rep < std::max<std::size_t>(1, settings.repeats); ++rep) {
    Rng rng(stream_seed(settings.seed, rep));
    const auto start = Clock::now();
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < settings.samples; ++i) acc += sampler.sample(rng)[0];
    row.per_sample_s = std::min(row.per_sample_s,
                                seconds_since(start) / static_cast<double>(std::max<std::size_t>(1, settings.samples)));
    g_sink = g_sink + acc;
  }

  if (settings.assortment_size > 0) {
    // Offer center items and outsiders alternately.
    std::vector<ItemId> offered;
    for (std::size_t i = 0; i < settings.assortment_size && i < n; ++i)
      offered.push_back(static_cast<ItemId>(i % 2 == 0 ? 1 + i / 2 : n - i / 2));
    std::sort(offered.begin(), offered.end());
    offered.erase(std::unique(offered.begin(), offered.end()), offered.end());
    const Assortment a = Assortment::make(offered, model.universe());
    const auto start = Clock::now();
    const ChoiceDistribution dist = dypchip(model, sampler.profiles(), a);
    row.choice_prob_s = seconds_since(start);
    g_sink = g_sink + static_cast<std::uint64_t>(dist.total() * 1e6);
  }
  return row;
}

std::vector<BenchRow> bench_grid(const std::vector<std::size_t>& ns, const std::vector<std::size_t>& ks,
                                 const BenchSettings& settings) {
  std::vector<BenchRow> rows;
  for (std::size_t n : ns)
    for (std::size_t k : ks)
      if (k <= n) rows.push_back(bench_cell(n, k, settings));
  return rows;
}

double calibration_seconds() {
  double best = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < 3; ++rep) {
    const auto start = Clock::now();
    std::uint64_t x = 0;
    for (std::uint64_t i = 0; i < 20'000'000; ++i) x = splitmix64(x + i);
    g_sink = g_sink + x;
    best = std::min(best, seconds_since(start));
  }
  return best;
}

void write_bench_table(std::ostream& out, const std::vector<BenchRow>& rows, double calibration) {
  out << "# calibration_s=" << calibration << '\n';
  out << "n\tk\tpreprocess_s\tper_sample_s\tchoice_prob_s\n";
  for (const BenchRow& r : rows)
    out << r.n << '\t' << r.k << '\t' << r.preprocess_s << '\t' << r.per_sample_s << '\t'
        << r.choice_prob_s << '\n';
}

}  // namespace topk
