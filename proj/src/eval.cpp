#include "topkgmm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "topkgmm/parallel.hpp"

namespace topk {

ChoiceDistribution empirical_choice_probs(const PreferenceDataset& data, const Assortment& a,
                                          std::uint64_t samples, Rng& rng) {
  if (data.empty()) throw Error(Errc::kEmptyDataset, "no records to sample from");
  if (samples == 0) throw Error(Errc::kInvalidArgument, "samples must be positive");
  const std::vector<ItemId> options = a.with_null();
  std::vector<std::uint64_t> counts(options.size(), 0);
  for (std::uint64_t t = 0; t < samples; ++t) {
    const ItemId c = choice(data.records[rng.below(data.size())], a, rng);
    const auto at = std::lower_bound(options.begin() + 1, options.end(), c);
    ++counts[c == kNoPurchase ? 0 : static_cast<std::size_t>(at - options.begin())];
  }
  std::vector<std::pair<ItemId, double>> entries;
  for (std::size_t i = 0; i < options.size(); ++i)
    entries.emplace_back(options[i], static_cast<double>(counts[i]) / static_cast<double>(samples));
  return ChoiceDistribution(std::move(entries));
}

std::vector<Assortment> draw_eval_assortments(Universe universe, const EvalConfig& config) {
  const std::size_t items = universe.size() - 1;
  if (config.r == 0 || config.r > items)
    throw Error(Errc::kInvalidArgument, "assortment size must lie in [1, " + std::to_string(items) + "]");
  Rng rng(config.seed);
  std::vector<ItemId> pool(items);
  std::vector<Assortment> out;
  out.reserve(config.num_assortments);
  for (std::size_t n = 0; n < config.num_assortments; ++n) {
    for (std::size_t i = 0; i < items; ++i) pool[i] = static_cast<ItemId>(i + 1);
    for (std::size_t i = 0; i < config.r; ++i) std::swap(pool[i], pool[i + rng.below(items - i)]);
    out.push_back(Assortment::make(std::span<const ItemId>(pool.data(), config.r), universe));
  }
  return out;
}

EvalReport evaluate(const Predictor& predictor, const PreferenceDataset& test, const EvalConfig& config) {
  if (test.empty()) throw Error(Errc::kEmptyDataset, "test split is empty");
  const std::vector<Assortment> assortments = draw_eval_assortments(test.universe, config);
  EvalReport report;
  report.config = config;
  report.errors.assign(assortments.size(), 0.0);
  parallel_for(assortments.size(), [&](std::size_t i) {
    Rng rng(eval_stream_seed(config.seed, i));
    const ChoiceDistribution empirical = empirical_choice_probs(test, assortments[i], config.samples, rng);
    const ChoiceDistribution predicted = predictor(assortments[i]);
    double gap = 0.0;
    for (const auto& [id, prob] : empirical.entries()) gap += std::abs(predicted[id] - prob);
    report.errors[i] = gap / static_cast<double>(empirical.size());
  });
  double total = 0.0;
  for (double e : report.errors) total += e;
  report.mean_error = report.errors.empty() ? 0.0 : total / static_cast<double>(report.errors.size());
  return report;
}

GridResult grid_search_center(const std::vector<ItemId>& center, const PreferenceDataset& test,
                              const EvalConfig& config, const std::vector<double>& p_grid,
                              const std::vector<double>& beta_grid) {
  if (p_grid.empty() || beta_grid.empty()) throw Error(Errc::kInvalidArgument, "empty grid");
  GridResult result;
  result.center = center;
  const TopKList tau = TopKList::make(center, test.universe);
  for (double p : p_grid) {
    for (double beta : beta_grid) {
      const TopKGMM model = TopKGMM::with_unit_weights(tau, beta, p);
      const ProfileDistribution profiles = profile_distribution(model);
      GridCell cell{p, beta, evaluate([&](const Assortment& a) { return dypchip(model, profiles, a); },
                                      test, config)};
      cell.report.predictor = "topkgmm";
      cell.report.p = p;
      cell.report.beta = beta;
      result.cells.push_back(std::move(cell));
    }
  }
  for (std::size_t i = 1; i < result.cells.size(); ++i)
    if (result.cells[i].report.mean_error < result.cells[result.best].report.mean_error) result.best = i;
  return result;
}

GridResult grid_search(const PreferenceDataset& train, const PreferenceDataset& test,
                       const GridConfig& config, const std::vector<double>& p_grid,
                       const std::vector<double>& beta_grid) {
  DataOracle oracle(train.records, config.learn_seed);
  const LearnedCenter learned = bucchoi2(oracle, config.learn);
  if (learned.order.empty())
    throw Error(Errc::kOracleFailure, "no item beat the no-purchase option on the training split");
  return grid_search_center(learned.order, test, config.eval, p_grid, beta_grid);
}

std::vector<ChoiceObservation> collect_choice_log(const PreferenceDataset& data, std::size_t assortments,
                                                  std::size_t r, std::uint64_t samples,
                                                  std::uint64_t seed) {
  const EvalConfig draw{assortments, r, samples, seed};
  DataOracle oracle(data.records, stream_seed(seed, 0xc0ffee));
  std::vector<ChoiceObservation> log;
  log.reserve(assortments * samples);
  for (const Assortment& a : draw_eval_assortments(data.universe, draw))
    for (std::uint64_t t = 0; t < samples; ++t) log.push_back({a, oracle.query(a)});
  return log;
}

EvalReport evaluate_mnl(const PreferenceDataset& train, const PreferenceDataset& test,
                        const EvalConfig& config, MNLModel* fitted) {
  // Enough training assortments that every item is offered many times.
  const std::size_t items = train.universe.size() - 1;
  const std::size_t assortments = std::max<std::size_t>(config.num_assortments, 10 * items / config.r + 1);
  const std::vector<ChoiceObservation> log =
      collect_choice_log(train, assortments, config.r, config.samples, stream_seed(config.seed, 0x3a1));
  MnlFitOptions options;
  options.ridge = 1e-6;
  const MNLModel model = mnl_fit(log, train.universe, options);
  if (fitted != nullptr) *fitted = model;
  EvalReport report = evaluate([&](const Assortment& a) { return mnl_choice_prob(model, a); }, test, config);
  report.predictor = "mnl";
  return report;
}

void write_eval_header(std::ostream& out) {
  out << "predictor\tp\tbeta\tassortments\tr\tsamples\tseed\tmean_error\n";
}

void write_eval_row(std::ostream& out, const EvalReport& report) {
  out << report.predictor << '\t' << report.p << '\t' << report.beta << '\t'
      << report.config.num_assortments << '\t' << report.config.r << '\t' << report.config.samples
      << '\t' << report.config.seed << '\t' << report.mean_error << '\n';
}

}  // namespace topk
