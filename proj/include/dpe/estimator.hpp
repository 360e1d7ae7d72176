#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dpe/model.hpp"

namespace dpe {

struct EstimationResult {
  ParamIndex chosen_index = 0;
  // Mean log-objective (1/n) sum ln q(y_k; theta_j) per point.
  std::vector<double> objective_values;
  // Normalized log posterior, present for Bayes estimates.
  std::optional<std::vector<double>> posterior_log_weights;
  bool tie_occurred = false;
};

struct MleSpec {};
struct BayesSpec {
  Prior prior;
};
// Two-point rule: theta_0 iff mean[ln f(y;theta_0) - ln f(y;theta_1)] >= -k.
struct ShiftedSpec {
  double k = 0.0;
};
using EstimatorSpec = std::variant<MleSpec, BayesSpec, ShiftedSpec>;

std::string describe(const EstimatorSpec& spec);

// Applies an estimator to the per-point mean log-likelihoods of n observations.
// Every estimator in this library depends on the data only through this vector.
EstimationResult decide(std::span<const double> mean_log_objective, std::size_t n, const EstimatorSpec& spec);

// Mean log-likelihood per parameter point.
std::vector<double> mean_log_likelihood(const Model& model, std::span<const Observation> data);

EstimationResult m_estimate(const Model& model, std::span<const Observation> data);
EstimationResult bayes_estimate(const Model& model, std::span<const Observation> data, const Prior& prior);
EstimationResult shifted_estimate(const Model& model, std::span<const Observation> data, double k);
EstimationResult estimate(const Model& model, std::span<const Observation> data, const EstimatorSpec& spec);

}  // namespace dpe
