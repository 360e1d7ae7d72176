#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dpe/model.hpp"

namespace dpe {

// -min_{j != truth} KL(theta_j || theta_truth)
double chapman_robbins_bound(const Model& model, ParamIndex truth);
// -min over pairs of the Chernoff information
double minimax_bound(const Model& model);

struct BoundsReport {
  ParamIndex truth = 0;
  double cr_rate_bound = 0.0;
  double minimax_rate_bound = 0.0;
  double inaccuracy_cap = 0.0;          // -cr_rate_bound
  std::vector<ParamIndex> cr_argmax;    // alternatives attaining the CR bound
  std::vector<double> cr_by_truth;      // CR bound with every point as the truth
  Eigen::MatrixXd kl;                   // kl(a, b) = KL(theta_a || theta_b), zero diagonal
  Eigen::MatrixXd chernoff;             // symmetric, zero diagonal
};

BoundsReport bounds_report(const Model& model, ParamIndex truth, unsigned threads = 0);

// Least-squares fit ln P = a + slope * n + c * ln n.
struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double log_n_coef = 0.0;
  bool vanishing = false;  // some P is exactly 0: slope reported as -inf
};
ExponentFit fit_exponent(const std::vector<double>& n_grid, const std::vector<double>& log_probs);

struct EfficiencyVerdict {
  std::vector<ExponentFit> per_truth;
  ExponentFit worst_case;             // fit of max over truth points
  std::vector<bool> attains_cr_by_truth;
  bool attains_cr = false;            // at the report's truth
  bool attains_minimax = false;
};

// log_probs[t][k] = ln P_t(estimate != theta_t) at n_grid[k]. Needs at least 4 grid points.
EfficiencyVerdict efficiency_verdict(const std::vector<double>& n_grid,
                                     const std::vector<std::vector<double>>& log_probs, const BoundsReport& bounds,
                                     double tol = 0.02);

}  // namespace dpe
