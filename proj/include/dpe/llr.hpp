#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "dpe/convex.hpp"
#include "dpe/model.hpp"

namespace dpe {

enum class Backend { analytic, empirical };

struct LlrOptions {
  Backend backend = Backend::analytic;
  std::size_t sample_size = 100000;  // m, empirical backend only
  std::uint64_t seed = 0x5EEDULL;
};

// The per-observation log-likelihood-ratio vector of a candidate point i,
//   X^(i) = [ln q(Y; theta_i) - ln q(Y; theta_j)]_{j != i},
// components in increasing j, together with its log-MGF under the truth.
// The empirical backend freezes one seeded sample at construction, so all
// evaluations are deterministic.
class LlrSystem {
 public:
  // Correctly specified: data drawn from theta_truth.
  LlrSystem(Model model, ParamIndex truth, ParamIndex candidate, LlrOptions opts = {});
  // Misspecified: the truth is represented by an external sample.
  LlrSystem(Model model, std::span<const Observation> truth_sample, ParamIndex candidate);

  std::size_t dim() const noexcept { return components_.size(); }
  ParamIndex candidate() const noexcept { return candidate_; }
  std::optional<ParamIndex> truth_index() const noexcept { return truth_; }
  // Parameter index of each vector component.
  const std::vector<ParamIndex>& components() const noexcept { return components_; }
  Backend backend() const noexcept { return backend_; }
  const Model& model() const noexcept { return model_; }

  // Lambda(l) = ln E exp(<l, X>). May be +inf.
  double lmgf(const Eigen::VectorXd& lambda) const;
  // Tilted mean of X.
  Eigen::VectorXd lmgf_grad(const Eigen::VectorXd& lambda) const;
  // Tilted covariance of X.
  Eigen::MatrixXd lmgf_hess(const Eigen::VectorXd& lambda) const;
  // E X under the truth.
  Eigen::VectorXd mean() const { return lmgf_grad(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()))); }

  SmoothFunction as_function() const;

 private:
  // X = a*Y + b with Y ~ N(mean, var).
  struct GaussianLaw {
    Eigen::VectorXd a, b;
    double mean, var;
  };
  // X = c*Y - d with Y ~ Poisson(mean).
  struct PoissonLaw {
    Eigen::VectorXd c, d;
    double mean;
  };
  // Atoms (rows) with log-probabilities.
  struct FiniteLaw {
    Eigen::MatrixXd atoms;
    Eigen::VectorXd log_weights;
  };

  void check_lambda(const Eigen::VectorXd& lambda) const;
  static FiniteLaw sample_law(const Model& model, std::span<const Observation> sample, ParamIndex candidate,
                              const std::vector<ParamIndex>& comps);
  // Softmax weights of the tilted finite law.
  Eigen::VectorXd tilted_weights(const FiniteLaw& law, const Eigen::VectorXd& lambda) const;

  Model model_;
  std::optional<ParamIndex> truth_;
  ParamIndex candidate_;
  std::vector<ParamIndex> components_;
  Backend backend_;
  std::variant<GaussianLaw, PoissonLaw, FiniteLaw> law_;
};

struct CramerResult {
  double value = 0.0;      // +inf when the supremum diverges
  Eigen::VectorXd lambda;  // maximizer (last iterate when divergent)
  int iterations = 0;
  double grad_norm = 0.0;
};

// Lambda*(y) = sup_l <y, l> - Lambda(l). Throws ConvergenceError when the
// ascent stalls above tolerance without diverging.
CramerResult cramer_transform(const LlrSystem& sys, const Eigen::VectorXd& y, const SolverOptions& opts = {});

// H_gamma = integral of prod_j f(y; theta_j)^gamma_j, sum(gamma) = 1.
double log_hellinger_transform(const Model& model, std::span<const double> gamma);
double hellinger_transform(const Model& model, std::span<const double> gamma);

// Exponents gamma for which exp(Lambda^(i)(lambda)) = H_gamma when the truth is theta_t:
// gamma_i = sum(lambda), gamma_j = -lambda_j (j != i, t), gamma_t = 1 - lambda_t.
std::vector<double> hellinger_exponents(const LlrSystem& sys, const Eigen::VectorXd& lambda);

// |exp(Lambda(lambda)) - H_gamma(lambda)|.
double check_hellinger_identity(const LlrSystem& sys, const Eigen::VectorXd& lambda);

}  // namespace dpe
