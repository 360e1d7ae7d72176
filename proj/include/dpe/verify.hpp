#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpe/estimator.hpp"
#include "dpe/model.hpp"

namespace dpe {

inline constexpr double kEnumerationGuard = 1e8;

// Exact law of the estimate under one truth point.
struct ExactDistribution {
  std::size_t n = 0;
  ParamIndex truth = 0;
  std::vector<double> log_prob;  // ln P(estimate = theta_i)
  std::string estimator;
  std::size_t count_vectors = 0;
};

// Number of multinomial count vectors of n draws over `symbols` cells.
double count_vector_total(std::size_t symbols, std::size_t n);

// Exact enumeration over count vectors; deterministic for any thread count.
ExactDistribution enumerate_exact(const Model& model, const EstimatorSpec& spec, ParamIndex truth, std::size_t n,
                                  unsigned threads = 0);

struct SimulationResult {
  std::size_t n = 0;
  ParamIndex truth = 0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> counts;
  std::vector<double> p_hat;
  std::vector<std::pair<double, double>> wilson95;
  std::string estimator;
};

// Replicate r draws its n observations from stream r of the master seed.
SimulationResult simulate(const Model& model, const EstimatorSpec& spec, ParamIndex truth, std::size_t n,
                          std::size_t replicates, std::uint64_t seed, unsigned threads = 0);

// Two-point threshold rule on theta_0 = alpha, theta_1 = -alpha, N(theta, sigma^2):
// theta_0 iff mean LLR >= -k. k = 0 is the MLE.
struct GaussianErrors {
  double err0 = 0.0;  // P_theta0(estimate = theta_1)
  double err1 = 0.0;  // P_theta1(estimate = theta_0)
  double log_err0 = 0.0;
  double log_err1 = 0.0;
};
GaussianErrors gaussian_closed_form(double alpha, double sigma, double n, double k = 0.0);

// Rows: truth points. Columns: ln P_truth(estimate = theta_j).
Eigen::MatrixXd exact_law_matrix(const Model& model, const EstimatorSpec& spec, std::size_t n, unsigned threads = 0);
Eigen::MatrixXd simulated_law_matrix(const std::vector<SimulationResult>& runs);
Eigen::MatrixXd gaussian_law_matrix(double alpha, double sigma, double n, double k = 0.0);

struct RiskRow {
  double r1 = 0.0;   // misclassification probability
  double log_r1 = 0.0;
  std::optional<double> r2;  // mean squared error
  std::optional<double> log_r2;
  double r3 = 0.0;   // weighted misclassification
};

struct RiskTable {
  std::vector<RiskRow> rows;  // one per truth point
  double bayes_risk = 0.0;    // sum_t prior_t * R1_t
  double log_bayes_risk = 0.0;
  double error_probability = 0.0;  // uniform-prior Bayes risk
  double max_r1 = 0.0;
  double log_max_r1 = 0.0;
};

// weights(t, j) = a_j(theta_t) > 0 for j != t; defaults to ones. Prior defaults to uniform.
// R2 is filled only when the space carries a numeric embedding.
RiskTable risk_table(const Eigen::MatrixXd& log_law, const ParameterSpace& space,
                     const std::optional<Eigen::MatrixXd>& weights = std::nullopt,
                     const std::optional<Prior>& prior = std::nullopt);

// E[estimate] under the law of one truth row; needs an embedding.
double mean_estimate(const std::vector<double>& log_prob, const ParameterSpace& space);

// p inside the z = radius Wilson interval of successes / trials.
bool within_wilson(std::size_t successes, std::size_t trials, double p, double radius = 4.0);
// |p_hat - p| <= radius * sqrt(p (1 - p) / trials).
bool within_binomial_se(double p_hat, double p, std::size_t trials, double radius = 4.0);

// Runs check(seed); on failure retries once with fresh_seed(seed).
struct CheckOutcome {
  bool passed = false;
  std::uint64_t seed = 0;
  bool reran = false;
};
std::uint64_t fresh_seed(std::uint64_t seed);
CheckOutcome check_with_rerun(std::uint64_t seed, const std::function<bool(std::uint64_t)>& check);

}  // namespace dpe
