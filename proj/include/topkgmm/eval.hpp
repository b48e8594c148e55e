#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "topkgmm/choice.hpp"
#include "topkgmm/dataset.hpp"
#include "topkgmm/learn.hpp"
#include "topkgmm/mnl.hpp"

namespace topk {

/// Frequencies of `samples` choices on `a`, each from a uniformly drawn record.
ChoiceDistribution empirical_choice_probs(const PreferenceDataset& data, const Assortment& a,
                                          std::uint64_t samples, Rng& rng);

struct EvalConfig {
  std::size_t num_assortments = 100;
  std::size_t r = 5;
  std::uint64_t samples = 1000;
  std::uint64_t seed = 0;
};

struct EvalReport {
  std::string predictor;
  double p = 0.0, beta = 0.0;  // echo only; 0 for predictors without them
  EvalConfig config;
  double mean_error = 0.0;
  std::vector<double> errors;  // per assortment
};

using Predictor = std::function<ChoiceDistribution(const Assortment&)>;

/// The assortments evaluate() draws: uniform size-r subsets of the items.
std::vector<Assortment> draw_eval_assortments(Universe universe, const EvalConfig& config);

/// Seed of the empirical sampling stream for assortment `index`.
inline std::uint64_t eval_stream_seed(std::uint64_t seed, std::size_t index) {
  return stream_seed(seed ^ 0x5e1ec7edULL, index);
}

/// Mean over assortments of the mean absolute gap between predicted and
/// empirical probabilities over the offered options.
EvalReport evaluate(const Predictor& predictor, const PreferenceDataset& test,
                    const EvalConfig& config);

struct GridCell {
  double p = 0.0, beta = 0.0;
  EvalReport report;
};

struct GridResult {
  std::vector<ItemId> center;
  std::vector<GridCell> cells;  // p-major, in grid order
  std::size_t best = 0;
};

struct GridConfig {
  EvalConfig eval;
  LearnOptions learn{.k_cap = 15};  // bucchoi2 settings for the center
  std::uint64_t learn_seed = 1;
};

/// Learns one center from `train` and scores unit-weight models for every
/// (p, beta) pair on `test`.
GridResult grid_search(const PreferenceDataset& train, const PreferenceDataset& test,
                       const GridConfig& config, const std::vector<double>& p_grid,
                       const std::vector<double>& beta_grid);

/// Scores a fixed center at every (p, beta) pair.
GridResult grid_search_center(const std::vector<ItemId>& center, const PreferenceDataset& test,
                              const EvalConfig& config, const std::vector<double>& p_grid,
                              const std::vector<double>& beta_grid);

/// Choice log of `samples` answers on each of `assortments` random size-r
/// assortments, drawn from the records.
std::vector<ChoiceObservation> collect_choice_log(const PreferenceDataset& data, std::size_t assortments,
                                                  std::size_t r, std::uint64_t samples,
                                                  std::uint64_t seed);

/// Fits an MNL on a log drawn from `train` and evaluates it on `test`.
EvalReport evaluate_mnl(const PreferenceDataset& train, const PreferenceDataset& test,
                        const EvalConfig& config, MNLModel* fitted = nullptr);

/// Tab-separated header and one line per report.
void write_eval_header(std::ostream& out);
void write_eval_row(std::ostream& out, const EvalReport& report);

}  // namespace topk
