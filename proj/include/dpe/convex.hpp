#pragma once

#include <Eigen/Dense>
#include <functional>

namespace dpe {

// Twice-differentiable objective with its derivatives.
struct SmoothFunction {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
};

struct SolverOptions {
  double grad_tol = 1e-9;  // infinity norm of the (projected) gradient
  int max_iter = 10000;
  double divergence_radius = 1e7;
};

struct SolverResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool unbounded = false;  // iterates left the divergence radius while improving
};

// Damped Newton with backtracking on a convex function over R^d.
SolverResult minimize_convex(const SmoothFunction& f, Eigen::VectorXd x0, const SolverOptions& opts = {});

// Projected Newton (Bertsekas) over the nonnegative orthant.
SolverResult minimize_convex_nonneg(const SmoothFunction& f, Eigen::VectorXd x0, const SolverOptions& opts = {});

}  // namespace dpe
