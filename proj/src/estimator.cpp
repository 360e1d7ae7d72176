#include "dpe/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dpe/error.hpp"
#include "dpe/numeric.hpp"

namespace dpe {

namespace {

// Smallest index attaining the maximum.
EstimationResult argmax(std::vector<double> decision, std::vector<double> objective) {
  EstimationResult result;
  std::size_t best = 0;
  for (std::size_t j = 1; j < decision.size(); ++j)
    if (decision[j] > decision[best]) best = j;
  for (std::size_t j = 0; j < decision.size(); ++j)
    if (j != best && decision[j] == decision[best]) result.tie_occurred = true;
  result.chosen_index = best;
  result.objective_values = std::move(objective);
  return result;
}

}  // namespace

std::string describe(const EstimatorSpec& spec) {
  if (std::holds_alternative<MleSpec>(spec)) return "mle";
  std::ostringstream os;
  os.precision(12);
  if (const auto* b = std::get_if<BayesSpec>(&spec)) {
    os << "bayes(";
    for (std::size_t j = 0; j < b->prior.size(); ++j) os << (j ? "," : "") << b->prior[j];
    os << ")";
  } else {
    os << "shifted(" << std::get<ShiftedSpec>(spec).k << ")";
  }
  return os.str();
}

EstimationResult decide(std::span<const double> mean_log_objective, std::size_t n, const EstimatorSpec& spec) {
  if (n == 0) throw ValidationError("estimator needs at least one observation");
  std::vector<double> objective(mean_log_objective.begin(), mean_log_objective.end());
  if (objective.empty()) throw ValidationError("empty objective vector");

  if (const auto* b = std::get_if<BayesSpec>(&spec)) {
    if (b->prior.size() != objective.size()) throw ValidationError("prior length does not match parameter space");
    const double dn = static_cast<double>(n);
    std::vector<double> decision(objective.size());
    std::vector<double> log_post(objective.size());
    for (std::size_t j = 0; j < objective.size(); ++j) {
      decision[j] = objective[j] + std::log(b->prior[j]) / dn;
      log_post[j] = dn * objective[j] + std::log(b->prior[j]);
    }
    const double norm = log_sum_exp(log_post);
    for (double& v : log_post) v -= norm;
    auto result = argmax(std::move(decision), std::move(objective));
    result.posterior_log_weights = std::move(log_post);
    return result;
  }
  if (const auto* s = std::get_if<ShiftedSpec>(&spec)) {
    if (objective.size() != 2) throw ValidationError("shifted estimator requires a two-point parameter space");
    const double llr = objective[0] - objective[1];
    EstimationResult result;
    result.chosen_index = llr >= -s->k ? 0 : 1;
    result.tie_occurred = llr == -s->k;
    result.objective_values = std::move(objective);
    return result;
  }
  auto decision = objective;
  return argmax(std::move(decision), std::move(objective));
}

std::vector<double> mean_log_likelihood(const Model& model, std::span<const Observation> data) {
  if (data.empty()) throw ValidationError("data is empty");
  // Summing in sorted order makes the result independent of data order, bit for bit.
  std::vector<Observation> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> sums(model.space().size(), 0.0);
  for (Observation y : sorted)
    for (std::size_t j = 0; j < sums.size(); ++j) sums[j] += model.log_density(j, y);
  for (double& s : sums) s /= static_cast<double>(data.size());
  return sums;
}

EstimationResult estimate(const Model& model, std::span<const Observation> data, const EstimatorSpec& spec) {
  const auto objective = mean_log_likelihood(model, data);
  return decide(objective, data.size(), spec);
}

EstimationResult m_estimate(const Model& model, std::span<const Observation> data) {
  return estimate(model, data, MleSpec{});
}

EstimationResult bayes_estimate(const Model& model, std::span<const Observation> data, const Prior& prior) {
  return estimate(model, data, BayesSpec{prior});
}

EstimationResult shifted_estimate(const Model& model, std::span<const Observation> data, double k) {
  if (model.space().size() != 2) throw ValidationError("shifted estimator requires a two-point parameter space");
  return estimate(model, data, ShiftedSpec{k});
}

}  // namespace dpe
