#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dpe/llr.hpp"
#include "dpe/model.hpp"

namespace dpe {

// Large-deviation exponent of P(theta_hat = theta_i), i.e. the infimum of the
// Cramer transform over the (shifted) nonnegative orthant. Computed through the
// dual I = sup_{l >= 0} <l, c> - Lambda(l) and checked against the primal value
// at the recovered dominating point on every call.
struct AlternativeRate {
  ParamIndex alternative = 0;
  double rate = 0.0;                  // nats per observation
  Eigen::VectorXd dual_certificate;   // lambda* >= 0
  Eigen::VectorXd dominating_point;   // grad Lambda(lambda*)
  double primal_value = 0.0;          // Lambda*(dominating_point)
  double duality_gap = 0.0;
  bool misidentified = false;         // E X^(i) already in the target set: no decay
};

// Target set {y : y >= lower} componentwise (lower = 0 gives the orthant).
AlternativeRate orthant_rate(const LlrSystem& sys, const Eigen::VectorXd& lower, const SolverOptions& opts = {});
AlternativeRate alternative_rate(const LlrSystem& sys, const SolverOptions& opts = {});

struct RateReport {
  ParamIndex truth = 0;
  std::vector<AlternativeRate> per_alternative;  // every i != truth, increasing i
  double total_rate = 0.0;                        // min over per_alternative
  std::vector<ParamIndex> argmin;                 // alternatives attaining total_rate
  double max_duality_gap = 0.0;
};

// Rates for all alternatives, computed concurrently. threads = 0 picks a default.
RateReport rate_report(const Model& model, ParamIndex truth, const LlrOptions& opts = {}, unsigned threads = 0);

struct TotalRate {
  double rate = 0.0;
  std::vector<ParamIndex> argmin;
};
TotalRate total_error_rate(const Model& model, ParamIndex truth, const LlrOptions& opts = {});

// KL(theta_a || theta_b).
double kl_divergence(const Model& model, ParamIndex a, ParamIndex b);

struct ChernoffResult {
  double information = 0.0;  // -min_u ln integral f_a^u f_b^(1-u)
  double u = 0.5;            // minimizer
};
ChernoffResult chernoff_information(const Model& model, ParamIndex a, ParamIndex b);

// The posterior-mode estimator picks theta_i when the LLR sum lands in
// prod_j (ln pi_i/pi_j, inf). The shift is O(1) so the exponent is the same
// as without a prior; rate_with_prior evaluates the shifted program at a
// large sample size n_eff to demonstrate it.
struct BayesRateInvariance {
  double rate_with_prior = 0.0;
  double rate_without = 0.0;
  double difference = 0.0;
  Eigen::VectorXd log_prior_ratio;  // [ln pi_i/pi_j]_{j != i}
};
BayesRateInvariance bayes_rate_invariance(const LlrSystem& sys, const Prior& prior, double n_eff = 1e9);

// sup_{j != truth} |theta_j - theta_truth| * probability.
double bias_bound(const ParameterSpace& space, ParamIndex truth, double probability);

}  // namespace dpe
