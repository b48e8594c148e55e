// Acceptance run: one PASS/FAIL/SKIP line per criterion. Exits non-zero when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "topkgmm/bench.hpp"
#include "topkgmm/choice.hpp"
#include "topkgmm/core.hpp"
#include "topkgmm/dataset.hpp"
#include "topkgmm/eval.hpp"
#include "topkgmm/learn.hpp"
#include "topkgmm/parallel.hpp"
#include "topkgmm/prim.hpp"
#include "topkgmm/profile.hpp"

using namespace topk;

namespace {

enum class Verdict { kPass, kFail, kSkip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {Verdict::kFail, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const char* tag = o.verdict == Verdict::kPass ? "PASS" : o.verdict == Verdict::kFail ? "FAIL" : "SKIP";
  if (o.verdict == Verdict::kFail) ++failures;
  std::printf("%s criterion %d (%s): %s [%.1fs]\n", tag, id, name, o.detail.c_str(), s);
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Verdict::kPass : Verdict::kFail, std::move(detail)}; }

// Nonempty subsets of the real items 1..u-1.
std::vector<std::vector<ItemId>> all_offers(std::size_t u) {
  std::vector<std::vector<ItemId>> out;
  for (std::uint32_t mask = 1; mask < (1U << (u - 1)); ++mask) {
    std::vector<ItemId> a;
    for (ItemId x = 1; x < u; ++x)
      if (mask >> (x - 1) & 1U) a.push_back(x);
    out.push_back(a);
  }
  return out;
}

std::vector<ItemId> random_subset(Rng& rng, ItemId lo, ItemId hi, std::size_t size) {
  std::vector<ItemId> ids(hi - lo + 1);
  std::iota(ids.begin(), ids.end(), lo);
  for (std::size_t i = 0; i < size; ++i) std::swap(ids[i], ids[i + rng.below(ids.size() - i)]);
  ids.resize(size);
  return ids;
}

Outcome normalization() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst_sum = 0.0, worst_marginal = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const TopKGMM m = oracle::random_model(rng, 2, 6, 3).build();
    const ExactPmf pmf = exact_pmf(m);
    const ProfileDistribution dist = profile_distribution(m);
    double total = 0.0;
    std::map<std::uint64_t, double> by_profile;
    for (const auto& [tau, pr] : pmf.entries()) {
      total += pr;
      by_profile[profile_of(tau, m.center()).members] += pr;
    }
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
    for (Profile s : dist.profiles()) {
      const auto it = by_profile.find(s.members);
      const double enumerated = it == by_profile.end() ? 0.0 : it->second;
      worst_marginal = std::max(worst_marginal, std::abs(enumerated - dist.probability(s)));
    }
    for (const auto& [mask, pr] : by_profile)
      worst_marginal = std::max(worst_marginal, std::abs(pr - dist.probability(Profile{mask})));
  }
  const double s = seconds_since(t0);
  return verdict(worst_sum <= 1e-12 && worst_marginal <= 1e-12 && s < 10.0,
                 fmt("max |sum-1|=%.2e, max marginal gap=%.2e, %.2fs (limits 1e-12, 10s)", worst_sum,
                     worst_marginal, s));
}

Outcome sampler_exactness(std::vector<TopKList>* replay) {
  const auto t0 = std::chrono::steady_clock::now();
  const Universe u5(5, true), u6(6, true);
  const std::vector<TopKGMM> models{
      TopKGMM(TopKList::make({1, 2}, u5), 0.0, 0.5, {1, 1, 1}),
      TopKGMM(TopKList::make({2, 4, 1}, u5), 0.4, 2.0, {0.8, 1.5, 1.0, 1.2}),
      TopKGMM(TopKList::make({3, 1}, u6), 1.0, 0.5, {1.0, 2.0, 1.0}),
      TopKGMM(TopKList::make({1, 2, 3}, u6), 0.4, 0.5, {1, 1, 1, 1}),
      TopKGMM(TopKList::make({5, 0, 2}, u6), 1.0, 2.0, {0.6, 1.4, 0.9, 1.1}),
  };
  constexpr std::size_t kDraws = 1'000'000;
  double worst_tv = 0.0, worst_z = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const Sampler sampler(models[i]);
    const ExactPmf pmf = exact_pmf(models[i]);
    const std::vector<TopKList> batch = sampler.sample_batch(kDraws, 2000 + i);
    if (i == 0) replay->assign(batch.begin(), batch.begin() + 1000);
    std::vector<double> counts(pmf.size(), 0.0);
    for (const TopKList& tau : batch) counts[pmf.index_of(tau)] += 1.0;
    double tv = 0.0;
    for (std::size_t j = 0; j < pmf.size(); ++j) {
      const double q = pmf.entries()[j].second;
      tv += std::abs(counts[j] / kDraws - q);
      worst_z = std::max(worst_z, std::abs(oracle::z_score(counts[j], kDraws, q)));
    }
    worst_tv = std::max(worst_tv, 0.5 * tv);
  }
  const double s = seconds_since(t0);
  return verdict(worst_tv < 0.01 && worst_z < 4.0 && s < 60.0,
                 fmt("5 models x 1e6 draws: max TV=%.4f, max |z|=%.2f, %.1fs (limits 0.01, 4, 60s)", worst_tv,
                     worst_z, s));
}

Outcome dypchip_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(303);
  double worst_entry = 0.0, worst_sum = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const TopKGMM m = oracle::random_model(rng, 2, 6, 3).build();
    std::vector<ItemId> offer = oracle::random_offer(rng, m.u());
    if (offer.empty()) offer.push_back(1 + static_cast<ItemId>(rng.below(m.u() - 1)));
    const Assortment a = Assortment::make(offer, m.universe());
    const ChoiceDistribution fast = dypchip(m, a), slow = choice_prob_bruteforce(m, a);
    for (ItemId x : a.with_null()) worst_entry = std::max(worst_entry, std::abs(fast[x] - slow[x]));
    worst_sum = std::max({worst_sum, std::abs(fast.total() - 1.0), std::abs(slow.total() - 1.0)});
  }
  const double s = seconds_since(t0);
  return verdict(worst_entry <= 1e-9 && worst_sum <= 1e-9 && s < 60.0,
                 fmt("100 pairs: max entry gap=%.2e, max |sum-1|=%.2e, %.2fs (limits 1e-9, 60s)", worst_entry,
                     worst_sum, s));
}

Outcome choice_inequalities() {
  std::size_t instances = 0, dominance_checks = 0, dominance_bad = 0, gap_checks = 0, gap_bad = 0;
  std::size_t decisive_bad = 0, decisive_bad_monotone = 0;
  double worst_dominance = 0.0, worst_gap = 0.0;
  for (std::size_t u = 3; u <= 6; ++u) {
    for (std::size_t k = 1; k <= std::min<std::size_t>(3, u - 1); ++k) {
      std::vector<ItemId> center(k);
      std::iota(center.begin(), center.end(), 1);
      for (double p : {0.5, 1.0, 2.0}) {
        for (int pattern = 0; pattern < 3; ++pattern) {
          // w0 = 1 is the smallest weight in every pattern.
          std::vector<double> w{1.0};
          for (std::size_t i = 1; i <= k; ++i)
            w.push_back(pattern == 0 ? 1.0 : pattern == 1 ? 1.0 + 0.5 * (k - i) : 1.0 + 0.5 * (i - 1));
          const double w_min = *std::min_element(w.begin(), w.end());
          for (double scale : {1.0, 2.0}) {
            const double beta = scale * std::log(3.0) / w_min;
            const TopKGMM m(TopKList::make(center, Universe(u, true)), beta, p, w);
            const ProfileDistribution profiles = profile_distribution(m);
            auto rank = [&](ItemId x) { return x >= 1 && x <= k ? static_cast<std::size_t>(x) : k + 1; };
            for (const auto& offer : all_offers(u)) {
              ++instances;
              const Assortment a = Assortment::make(offer, m.universe());
              const ChoiceDistribution c = dypchip(m, profiles, a);
              double tie = 0.0;
              for (Profile s : profiles.profiles()) tie += profiles.probability(s) * pi_bar(s, a, m);
              for (ItemId i : offer) {
                if (rank(i) > k) continue;
                for (ItemId j : a.with_null()) {
                  if (rank(j) <= rank(i)) continue;
                  double wsum = w[i];
                  for (ItemId x : offer)
                    if (rank(x) > rank(i) && rank(x) < rank(j)) wsum += w[x];
                  const double factor = std::exp(beta * wsum);
                  const double shortfall = c[j] * factor - c[i];
                  ++dominance_checks;
                  if (shortfall > 1e-12) {
                    ++dominance_bad;
                    worst_dominance = std::max(worst_dominance, shortfall);
                  }
                  if ((c[j] - tie) * factor - (c[i] - tie) > 1e-12) {
                    ++decisive_bad;
                    if (p >= 1.0 && pattern != 2) ++decisive_bad_monotone;
                  }
                }
              }
              if (offer.front() > k) continue;
              const ItemId top = offer.front();
              const double e = std::exp(-beta * w[top]);
              const double gap = (1.0 - e) / (1.0 + static_cast<double>(offer.size()) * e);
              for (ItemId x : a.with_null()) {
                if (x == top) continue;
                ++gap_checks;
                const double shortfall = gap - (c[top] - c[x]);
                if (shortfall > 1e-12) {
                  ++gap_bad;
                  worst_gap = std::max(worst_gap, shortfall);
                }
              }
            }
          }
        }
      }
    }
  }
  return verdict(dominance_bad == 0 && gap_bad == 0,
                 fmt("%zu instances; dominance violations %zu/%zu (worst shortfall %.2e), gap violations %zu/%zu "
                     "(worst %.2e); without the tie share: %zu, of which %zu with p >= 1 and non-increasing weights",
                     instances, dominance_bad, dominance_checks, worst_dominance, gap_bad, gap_checks, worst_gap,
                     decisive_bad, decisive_bad_monotone));
}

struct TopTestTrials {
  std::size_t hits = 0, false_positives = 0;
  std::vector<int> answers;  // for the replay check
};

TopTestTrials top_item_trials(std::size_t trials, std::uint64_t seed) {
  constexpr std::size_t n = 100, k = 10, r = 5;
  const double w = 2.0;
  const Universe universe(n + 1, true);
  std::vector<ItemId> center(k);
  std::iota(center.begin(), center.end(), 1);
  const TopKGMM model(TopKList::make(center, universe), std::log(3.0) / w, 0.5,
                      std::vector<double>(k + 1, w));
  const auto sampler = std::make_shared<const Sampler>(model);
  const auto m = static_cast<std::uint64_t>(std::ceil(64.0 * 3.0 * (r + 1) * (r + 1) * std::log(double(n + r))));
  TopTestTrials out;
  out.answers.assign(2 * trials, -2);
  std::vector<std::size_t> hit(trials, 0), fp(trials, 0);
  parallel_for(trials, [&](std::size_t t) {
    Rng rng(stream_seed(seed, t));
    ModelOracle oracle(sampler, stream_seed(seed + 1, t));
    std::vector<ItemId> offer;
    do offer = random_subset(rng, 1, n, r);
    while (std::none_of(offer.begin(), offer.end(), [](ItemId x) { return x <= k; }));
    const ItemId truth = *std::min_element(offer.begin(), offer.end());
    const auto top = query_tally(oracle, Assortment::make(offer, universe), m).top();
    hit[t] = top && *top == truth;
    out.answers[2 * t] = top ? static_cast<int>(*top) : -1;
    const std::vector<ItemId> outside = random_subset(rng, k + 1, n, r);
    const auto null_top = query_tally(oracle, Assortment::make(outside, universe), m).top();
    fp[t] = null_top.has_value();
    out.answers[2 * t + 1] = null_top ? static_cast<int>(*null_top) : -1;
  });
  out.hits = std::accumulate(hit.begin(), hit.end(), std::size_t{0});
  out.false_positives = std::accumulate(fp.begin(), fp.end(), std::size_t{0});
  return out;
}

Outcome top_item_test() {
  const auto t0 = std::chrono::steady_clock::now();
  const TopTestTrials t = top_item_trials(100, 505);
  const double s = seconds_since(t0);
  return verdict(t.hits >= 98 && t.false_positives == 0 && s < 300.0,
                 fmt("m=32169, true top found %zu/100 (need >= 98), null false positives %zu/100 (need < 1%%), "
                     "%.1fs (limit 300s)",
                     t.hits, t.false_positives, s));
}

struct SweepCell {
  double mean = 0.0, sd = 0.0;
  std::vector<double> distances;
  std::size_t exact_prefix = 0;  // trials whose first k learned items are the center in order
  double mean_extra = 0.0;       // learned items beyond k
};

SweepCell learn_sweep(double beta, std::uint64_t m, std::size_t trials, std::uint64_t seed) {
  constexpr std::size_t n = 1000, k = 12;
  const Universe universe(n + 1, true);
  SweepCell cell;
  cell.distances.assign(trials, 0.0);
  std::vector<std::size_t> prefix(trials, 0), extra(trials, 0);
  parallel_for(trials, [&](std::size_t t) {
    Rng rng(stream_seed(seed, t));
    const TopKList truth = TopKList::make(random_subset(rng, 1, n, k), universe);
    const TopKGMM model(truth, beta, 0.5, std::vector<double>(k + 1, 2.0));
    ModelOracle oracle(model, stream_seed(seed + 1, t));
    const LearnedCenter learned =
        bucchoi(oracle, {.r = 10, .m = m, .policy = TournamentPolicy::kScoreFallback});
    prefix[t] = learned.order.size() >= k && std::equal(truth.items().begin(), truth.items().end(), learned.order.begin());
    extra[t] = learned.order.size() > k ? learned.order.size() - k : 0;
    cell.distances[t] = learned.order.empty() ? 0.5 * k * (k - 1) / 2.0
                                              : kendall_p_distance(learned.tau_hat(universe), truth, 0.5);
  });
  cell.mean = std::accumulate(cell.distances.begin(), cell.distances.end(), 0.0) / trials;
  for (double d : cell.distances) cell.sd += (d - cell.mean) * (d - cell.mean);
  cell.sd = std::sqrt(cell.sd / trials);
  cell.exact_prefix = std::accumulate(prefix.begin(), prefix.end(), std::size_t{0});
  cell.mean_extra = static_cast<double>(std::accumulate(extra.begin(), extra.end(), std::size_t{0})) / trials;
  return cell;
}

Outcome learning_sweep() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::ostringstream detail;
  for (double beta : {0.8, 1.0, 1.2}) {
    const SweepCell c = learn_sweep(beta, 100, 10, 600 + static_cast<std::uint64_t>(beta * 10));
    ok = ok && c.mean == 0.0;
    detail << fmt("beta=%.1f m=100: %.2f+-%.2f (want 0; center prefix exact %zu/10, %.1f extra items); ", beta,
                  c.mean, c.sd, c.exact_prefix, c.mean_extra);
  }
  const SweepCell noisy = learn_sweep(0.4, 50, 10, 604);
  ok = ok && noisy.mean >= 6.375 && noisy.mean <= 19.125;
  const double s = seconds_since(t0);
  ok = ok && s < 900.0;
  detail << fmt("beta=0.4 m=50: %.2f+-%.2f (want [6.375, 19.125]; center prefix exact %zu/10, %.1f extra items); "
                "%.1fs (limit 900s)",
                noisy.mean, noisy.sd, noisy.exact_prefix, noisy.mean_extra, s);
  return verdict(ok, detail.str());
}

std::string sushi_path() {
  if (const char* env = std::getenv("TOPKMM_SUSHI")) return env;
  for (const char* p : {"data/sushi3a.5000.10.order", TOPKMM_SOURCE_DIR "/data/sushi3a.5000.10.order"})
    if (std::filesystem::exists(p)) return p;
  return {};
}

Outcome sushi_experiment() {
  const std::string path = sushi_path();
  if (path.empty() || !std::filesystem::exists(path))
    return {Verdict::kSkip, "warning: sushi3a.5000.10.order not found (set TOPKMM_SUSHI); skipped"};
  const auto t0 = std::chrono::steady_clock::now();
  const PreferenceDataset data = load_orders(path, OrderFormat::kSushi3);
  const auto [train, test] = split(data, 0.8, 7);
  const std::vector<double> ps{0.01, 0.025, 0.05, 0.075, 0.1, 0.25, 0.5, 1, 1.5, 2, 2.5, 5};
  const std::vector<double> betas{0.05, 0.1, 0.25, 0.5, 0.75, 1, 1.25, 1.5, 1.75, 2};
  GridConfig config;
  config.eval.seed = 7;
  const GridResult grid = grid_search(train, test, config, ps, betas);
  const EvalReport mnl = evaluate_mnl(train, test, config.eval);
  const GridCell& best = grid.cells[grid.best];
  const auto pi = static_cast<long>(grid.best / betas.size()), bi = static_cast<long>(grid.best % betas.size());
  const bool adjacent = std::abs(pi - 6) <= 1 && std::abs(bi - 0) <= 1;  // (0.5, 0.05)
  const double s = seconds_since(t0);
  return verdict(best.report.mean_error <= 0.06 && mnl.mean_error >= 0.13 && adjacent && s < 1800.0,
                 fmt("best %.4f at (p=%g, beta=%g) (want <= 0.06 near (0.5, 0.05)), MNL %.4f (want >= 0.13), %.1fs",
                     best.report.mean_error, best.p, best.beta, mnl.mean_error, s));
}

Outcome performance() {
  const BenchSettings settings{.samples = 50000, .repeats = 7, .assortment_size = 0};
  const double calibration = calibration_seconds();
  std::vector<BenchRow> rows;
  for (std::size_t k : {8, 10, 12}) rows.push_back(bench_cell(500, k, settings));
  const BenchRow small = bench_cell(200, 10, settings), large = bench_cell(1000, 10, settings);
  const double g1 = rows[1].preprocess_s / rows[0].preprocess_s, g2 = rows[2].preprocess_s / rows[1].preprocess_s;
  const double per = std::max(small.per_sample_s, large.per_sample_s) /
                     std::min(small.per_sample_s, large.per_sample_s);
  return verdict(g1 <= 6.0 && g2 <= 6.0 && per < 3.0,
                 fmt("calibration %.3fs; preprocess k=8/10/12 at n=500: %.2f/%.2f/%.2f calib units, growth %.2fx, "
                     "%.2fx (limit 6x); per-sample n=200 %.2e s, n=1000 %.2e s, ratio %.2f (limit 3x)",
                     calibration, rows[0].preprocess_s / calibration * 1e3, rows[1].preprocess_s / calibration * 1e3,
                     rows[2].preprocess_s / calibration * 1e3, g1, g2, small.per_sample_s, large.per_sample_s,
                     per));
}

std::string fingerprint(const std::vector<TopKList>& lists) {
  std::ostringstream out;
  write_sample_batch(out, lists, lists.empty() ? 0 : lists.front().universe().size(),
                     lists.empty() ? 0 : lists.front().k(), 0);
  return out.str();
}

Outcome determinism(const std::vector<TopKList>& sampler_replay) {
  std::vector<std::string> mismatches;
  auto check = [&](const char* what, bool same) {
    if (!same) mismatches.push_back(what);
  };

  const Universe u5(5, true);
  const TopKGMM first(TopKList::make({1, 2}, u5), 0.0, 0.5, {1, 1, 1});
  const std::vector<TopKList> again = Sampler(first).sample_batch(1000, 2000);
  check("sampler batch", fingerprint(again) == fingerprint(sampler_replay));

  const TopKGMM big(TopKList::make({3, 1, 4, 5}, Universe(30, true)), 0.7, 0.5, {1, 1, 1, 1, 1});
  const Sampler sampler(big);
  set_thread_limit(1);
  const auto one = sampler.sample_batch(20000, 9);
  set_thread_limit(0);
  check("sampler thread count", fingerprint(one) == fingerprint(sampler.sample_batch(20000, 9, 4)));

  const Assortment a = Assortment::make({1, 2, 4, 9}, Universe(30, true));
  std::ostringstream d1, d2;
  write_choice_distribution(d1, dypchip(big, a));
  set_thread_limit(1);
  write_choice_distribution(d2, dypchip(big, a));
  set_thread_limit(0);
  check("choice probabilities", d1.str() == d2.str());

  const TopTestTrials t1 = top_item_trials(4, 505), t2 = top_item_trials(4, 505);
  check("top-item trials", t1.answers == t2.answers);

  const SweepCell s1 = learn_sweep(0.4, 50, 3, 604), s2 = learn_sweep(0.4, 50, 3, 604);
  check("center learning", s1.distances == s2.distances);

  PreferenceDataset data;
  data.universe = Universe(13, true);
  data.k = 3;
  data.records = Sampler(TopKGMM(TopKList::make({2, 5, 7}, data.universe), 1.0, 0.5, {1, 1, 1, 1}))
                     .sample_batch(800, 3);
  const auto [train, test] = split(data, 0.8, 5);
  const EvalConfig config{.num_assortments = 10, .r = 4, .samples = 200, .seed = 11};
  auto grid_text = [&] {
    const GridResult g = grid_search_center({2, 5, 7}, test, config, {0.5, 1.0}, {0.5, 1.0});
    std::ostringstream out;
    write_eval_header(out);
    for (const GridCell& c : g.cells) write_eval_row(out, c.report);
    write_eval_row(out, evaluate_mnl(train, test, config));
    return out.str();
  };
  check("evaluation", grid_text() == grid_text());

  std::string detail = "sampler batches, thread counts, choice probabilities, top-item trials, center learning, "
                       "evaluation";
  if (mismatches.empty()) return {Verdict::kPass, detail + ": identical on re-run"};
  std::string bad;
  for (const auto& m : mismatches) bad += (bad.empty() ? "" : ", ") + m;
  return {Verdict::kFail, "outputs differ on re-run: " + bad};
}

}  // namespace

int main() {
  std::vector<TopKList> replay;
  report(1, "normalization", normalization);
  report(2, "sampler exactness", [&] { return sampler_exactness(&replay); });
  report(3, "choice probability exactness", dypchip_exactness);
  report(4, "choice-law inequalities", choice_inequalities);
  report(5, "top-item test", top_item_test);
  report(6, "center learning beta sweep", learning_sweep);
  report(7, "sushi experiment", sushi_experiment);
  report(8, "performance envelope", performance);
  report(9, "determinism", [&] { return determinism(replay); });
  std::printf("%s: %d criterion failure(s)\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
