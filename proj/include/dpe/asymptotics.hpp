#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "dpe/llr.hpp"

namespace dpe {

// -n * I
double crude_ld(double rate, double n);

struct TwoPointAsymptotic {
  double log_prob = 0.0;
  double mu = 0.0;          // root of Lambda'
  double lmgf_at_mu = 0.0;  // Lambda(mu) = -rate
  double curvature = 0.0;   // Lambda''(mu)
  bool lattice_warning = false;
};

// Two-point sharp asymptotic
//   n Lambda(mu) - ln mu - 0.5 ln(2 pi n Lambda''(mu)).
// The nonlattice assumption is not checked; lattice families only get a warning flag.
TwoPointAsymptotic exact_asymptotic_two_point(const LlrSystem& sys, double n);

struct SaddlepointResult {
  double log_prob = 0.0;
  double rate = 0.0;
  Eigen::VectorXd u;                 // tilt at the dominating point
  Eigen::VectorXd dominating_point;  // grad Lambda(u)
  Eigen::MatrixXd covariance;        // Hessian of Lambda at u
  double hessian_det = 0.0;
};

// Leading-order saddlepoint approximation of ln P(theta_hat = candidate):
//   -n I + ln E[exp(-sqrt(n) u.Z) 1{Z >= -sqrt(n) y}],  Z ~ N(0, V).
// For J = 1 the expectation is replaced by its leading term 1/(u sqrt(2 pi n V)).
// For J = 2, 3 it is integrated by nested adaptive quadrature. J > 3 is rejected.
SaddlepointResult saddlepoint_leading(const LlrSystem& sys, double n);

// ln E[exp(-c.Z) 1{Z >= lower}] for Z ~ N(0, cov), dimension 1 to 3.
double log_tilted_orthant(const Eigen::VectorXd& c, const Eigen::VectorXd& lower, const Eigen::MatrixXd& cov);

struct ApproxCurve {
  std::vector<double> n_grid;
  double rate = 0.0;
  std::vector<double> crude;
  std::optional<std::vector<double>> exact_j1;     // J = 1 only
  std::optional<std::vector<double>> saddlepoint;  // J <= 3 only
  std::optional<double> mu;
  std::optional<double> curvature;
  Eigen::VectorXd u;
  double hessian_det = 0.0;
  bool lattice_warning = false;
};

// All methods over an n grid; grid points are evaluated concurrently.
ApproxCurve approx_curve(const LlrSystem& sys, const std::vector<double>& n_grid, unsigned threads = 0);

}  // namespace dpe
