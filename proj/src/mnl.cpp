#include "topkgmm/mnl.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace topk {

void MNLModel::validate() const {
  if (scores.size() < 2) throw Error(Errc::kInvalidModel, "MNL needs at least two scores");
  for (double s : scores)
    if (!(s > 0.0) || !std::isfinite(s))
      throw Error(Errc::kInvalidModel, "MNL scores must be finite and positive");
}

ChoiceDistribution mnl_choice_prob(const MNLModel& model, const Assortment& a) {
  std::vector<std::pair<ItemId, double>> entries;
  double total = 0.0;
  for (ItemId id : a.with_null()) {
    if (id >= model.scores.size())
      throw Error(Errc::kMissingScore, "no score for item " + std::to_string(id));
    entries.emplace_back(id, model.scores[id]);
    total += model.scores[id];
  }
  for (auto& e : entries) e.second /= total;
  return ChoiceDistribution(std::move(entries));
}

namespace {

struct Objective {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd neg_hessian;
};

// Parameters are log-scores of items 1..u-1; item i maps to index i-1.
double mean_log_likelihood(std::span<const ChoiceObservation> log, const Eigen::VectorXd& theta,
                           double ridge) {
  auto score = [&](ItemId id) { return id == kNoPurchase ? 0.0 : theta[id - 1]; };
  double total = 0.0;
  for (const ChoiceObservation& obs : log) {
    double top = 0.0;
    for (ItemId id : obs.assortment.items()) top = std::max(top, score(id));
    double z = std::exp(-top);
    for (ItemId id : obs.assortment.items()) z += std::exp(score(id) - top);
    total += score(obs.chosen) - top - std::log(z);
  }
  const double n = static_cast<double>(log.size());
  return total / n - 0.5 * ridge * theta.squaredNorm();
}

Objective evaluate(std::span<const ChoiceObservation> log, const Eigen::VectorXd& theta,
                   double ridge) {
  const Eigen::Index dim = theta.size();
  Objective obj;
  obj.gradient = Eigen::VectorXd::Zero(dim);
  obj.neg_hessian = Eigen::MatrixXd::Zero(dim, dim);
  auto score = [&](ItemId id) { return id == kNoPurchase ? 0.0 : theta[id - 1]; };
  std::vector<double> prob;
  double total = 0.0;
  for (const ChoiceObservation& obs : log) {
    const auto& items = obs.assortment.items();
    double top = 0.0;
    for (ItemId id : items) top = std::max(top, score(id));
    prob.assign(items.size(), 0.0);
    double z = std::exp(-top);
    for (std::size_t i = 0; i < items.size(); ++i) {
      prob[i] = std::exp(score(items[i]) - top);
      z += prob[i];
    }
    for (double& v : prob) v /= z;
    total += score(obs.chosen) - top - std::log(z);
    if (obs.chosen != kNoPurchase) obj.gradient[obs.chosen - 1] += 1.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const Eigen::Index a = items[i] - 1;
      obj.gradient[a] -= prob[i];
      obj.neg_hessian(a, a) += prob[i];
      for (std::size_t j = 0; j < items.size(); ++j)
        obj.neg_hessian(a, static_cast<Eigen::Index>(items[j] - 1)) -= prob[i] * prob[j];
    }
  }
  const double n = static_cast<double>(log.size());
  obj.value = total / n - 0.5 * ridge * theta.squaredNorm();
  obj.gradient = obj.gradient / n - ridge * theta;
  obj.neg_hessian /= n;
  obj.neg_hessian.diagonal().array() += ridge;
  return obj;
}

}  // namespace

MNLModel mnl_fit(std::span<const ChoiceObservation> log, Universe universe,
                 const MnlFitOptions& options, MnlFitReport* report) {
  if (log.empty()) throw Error(Errc::kDegenerateLog, "choice log is empty");
  const std::size_t u = universe.size();
  std::vector<bool> offered(u, false);
  for (const ChoiceObservation& obs : log) {
    if (!(obs.assortment.universe() == universe))
      throw Error(Errc::kUniverseMismatch, "observation uses another universe");
    if (!obs.assortment.offers(obs.chosen))
      throw Error(Errc::kChoiceOutsideAssortment, "chosen item was not offered");
    for (ItemId id : obs.assortment.items()) offered[id] = true;
  }
  for (std::size_t i = 1; i < u; ++i)
    if (!offered[i]) throw Error(Errc::kDegenerateLog, "item " + std::to_string(i) + " is never offered");

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(u - 1));
  Objective obj = evaluate(log, theta, options.ridge);
  std::size_t iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (obj.gradient.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) break;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(obj.neg_hessian);
    Eigen::VectorXd step = ldlt.solve(obj.gradient);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || step.dot(obj.gradient) <= 0.0)
      step = obj.gradient;
    // Backtracking on the concave objective.
    double t = 1.0;
    Eigen::VectorXd next = theta + step;
    double value = mean_log_likelihood(log, next, options.ridge);
    while (!(value >= obj.value + 1e-4 * t * step.dot(obj.gradient)) && t > 1e-12) {
      t *= 0.5;
      next = theta + t * step;
      value = mean_log_likelihood(log, next, options.ridge);
    }
    if (t <= 1e-12) break;
    theta = next;
    obj = evaluate(log, theta, options.ridge);
  }
  const double grad_norm = obj.gradient.lpNorm<Eigen::Infinity>();
  if (report != nullptr) *report = {iter, grad_norm, obj.value};
  if (!(grad_norm < options.gradient_tolerance) || !theta.allFinite())
    throw Error(Errc::kNonConvergence, "gradient norm " + std::to_string(grad_norm) + " after " +
                                           std::to_string(iter) + " Newton steps");

  MNLModel model;
  model.scores.resize(u);
  model.scores[0] = 1.0;
  for (std::size_t i = 1; i < u; ++i) model.scores[i] = std::exp(theta[static_cast<Eigen::Index>(i - 1)]);
  return model;
}

}  // namespace topk
