#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "topkgmm/choice.hpp"

namespace topk {

/// Multinomial logit: an option is picked with probability proportional to
/// its score. scores[0] belongs to the no-purchase option.
struct MNLModel {
  std::vector<double> scores;

  /// Throws InvalidModel unless every score is finite and positive.
  void validate() const;
  friend bool operator==(const MNLModel&, const MNLModel&) = default;
};

ChoiceDistribution mnl_choice_prob(const MNLModel& model, const Assortment& a);

struct MnlFitOptions {
  /// L2 penalty on log-scores, per observation. 0 gives the plain MLE.
  double ridge = 0.0;
  double gradient_tolerance = 1e-8;
  std::size_t max_iterations = 200;
};

struct MnlFitReport {
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  double mean_log_likelihood = 0.0;
};

/// Maximum-likelihood scores by Newton's method on the mean log-likelihood in
/// log-score space, with the no-purchase log-score fixed at 0. Scores are
/// returned as exp(log-score).
MNLModel mnl_fit(std::span<const ChoiceObservation> log, Universe universe,
                 const MnlFitOptions& options = {}, MnlFitReport* report = nullptr);

}  // namespace topk
