#include "dpe/rates.hpp"

#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>

#include "dpe/error.hpp"
#include "dpe/numeric.hpp"
#include "dpe/parallel.hpp"

namespace dpe {

using Eigen::VectorXd;

namespace {

constexpr double kKktSlack = 1e-7;
constexpr double kTieTol = 1e-9;
constexpr std::size_t kEmpiricalDraws = 200000;
constexpr std::uint64_t kEmpiricalSeed = 0xC0FFEEULL;

// Monte Carlo draws under theta_b for families without closed forms.
std::vector<Observation> reference_sample(const Model& model, ParamIndex b) {
  if (!model.capabilities().can_sample)
    throw CapabilityError(model.family_name() + " family needs a sampler for divergence estimates");
  return model.sample(b, kEmpiricalSeed, 1, kEmpiricalDraws);
}

}  // namespace

AlternativeRate orthant_rate(const LlrSystem& sys, const VectorXd& lower, const SolverOptions& opts) {
  const auto dim = static_cast<Eigen::Index>(sys.dim());
  if (lower.size() != dim) throw ValidationError("orthant shift has wrong dimension");

  AlternativeRate out;
  out.alternative = sys.candidate();
  const VectorXd mean = sys.mean();
  out.misidentified = (mean - lower).minCoeff() >= 0.0;

  const SmoothFunction dual{[&](const VectorXd& l) { return sys.lmgf(l) - lower.dot(l); },
                            [&](const VectorXd& l) { return VectorXd(sys.lmgf_grad(l) - lower); },
                            [&](const VectorXd& l) { return sys.lmgf_hess(l); }};
  const auto res = minimize_convex_nonneg(dual, VectorXd::Zero(dim), opts);
  if (res.unbounded) throw ConvergenceError("rate program is unbounded: Lambda is not bounded below on the orthant");
  if (!res.converged)
    throw ConvergenceError("rate program did not converge: projected gradient " + std::to_string(res.grad_norm));

  out.dual_certificate = res.x;
  out.rate = std::max(0.0, -res.value);
  out.dominating_point = sys.lmgf_grad(res.x);
  // KKT: the dominating point must lie in the target set.
  if ((out.dominating_point - lower).minCoeff() < -kKktSlack)
    throw ConvergenceError("KKT check failed: dominating point outside the target set");

  if (out.misidentified) {
    out.primal_value = 0.0;
  } else {
    out.primal_value = cramer_transform(sys, out.dominating_point, opts).value;
  }
  out.duality_gap = std::abs(out.primal_value - out.rate);
  return out;
}

AlternativeRate alternative_rate(const LlrSystem& sys, const SolverOptions& opts) {
  return orthant_rate(sys, VectorXd::Zero(static_cast<Eigen::Index>(sys.dim())), opts);
}

RateReport rate_report(const Model& model, ParamIndex truth, const LlrOptions& opts, unsigned threads) {
  const auto& space = model.space();
  if (truth >= space.size()) throw ValidationError("truth index out of range");
  if (space.alternatives() == 0) throw ValidationError("rates need at least two parameter points");

  RateReport report;
  report.truth = truth;
  std::vector<ParamIndex> alts;
  for (ParamIndex i = 0; i < space.size(); ++i)
    if (i != truth) alts.push_back(i);
  report.per_alternative.resize(alts.size());
  parallel_for(alts.size(), threads, [&](std::size_t k) {
    const LlrSystem sys(model, truth, alts[k], opts);
    report.per_alternative[k] = alternative_rate(sys);
  });

  report.total_rate = std::numeric_limits<double>::infinity();
  for (const auto& r : report.per_alternative) {
    report.total_rate = std::min(report.total_rate, r.rate);
    report.max_duality_gap = std::max(report.max_duality_gap, r.duality_gap);
  }
  for (const auto& r : report.per_alternative)
    if (r.rate <= report.total_rate + kTieTol * std::max(1.0, report.total_rate)) report.argmin.push_back(r.alternative);
  return report;
}

TotalRate total_error_rate(const Model& model, ParamIndex truth, const LlrOptions& opts) {
  const auto report = rate_report(model, truth, opts);
  return {report.total_rate, report.argmin};
}

double kl_divergence(const Model& model, ParamIndex a, ParamIndex b) {
  const auto& space = model.space();
  if (a >= space.size() || b >= space.size()) throw ValidationError("KL index out of range");
  if (a == b) return 0.0;
  if (const auto* g = std::get_if<GaussianKnownVar>(&model.family())) {
    const double d = space.scalar(a) - space.scalar(b);
    return d * d / (2.0 * g->sigma * g->sigma);
  }
  if (std::holds_alternative<Poisson>(model.family())) {
    const double ta = space.scalar(a), tb = space.scalar(b);
    return tb - ta + ta * std::log(ta / tb);
  }
  if (model.capabilities().can_enumerate) {
    const auto table = model.enumerate_support();
    double kl = 0.0;
    for (std::size_t s = 0; s < table.symbols.size(); ++s) {
      const double pa = table.pmf[a][s];
      kl += pa * (std::log(pa) - std::log(table.pmf[b][s]));
    }
    return std::max(0.0, kl);
  }
  const auto sample = reference_sample(model, a);
  double kl = 0.0;
  for (Observation y : sample) kl += model.log_density(a, y) - model.log_density(b, y);
  return std::max(0.0, kl / static_cast<double>(sample.size()));
}

ChernoffResult chernoff_information(const Model& model, ParamIndex a, ParamIndex b) {
  const auto& space = model.space();
  if (a >= space.size() || b >= space.size()) throw ValidationError("Chernoff index out of range");
  if (a == b) return {0.0, 0.5};

  std::function<double(double)> log_h;
  std::vector<Observation> sample;
  if (model.capabilities().has_analytic_lmgf) {
    log_h = [&](double u) {
      std::vector<double> gamma(space.size(), 0.0);
      gamma[a] = u;
      gamma[b] = 1.0 - u;
      return log_hellinger_transform(model, gamma);
    };
  } else {
    sample = reference_sample(model, b);
    std::vector<double> llr(sample.size());
    for (std::size_t r = 0; r < sample.size(); ++r)
      llr[r] = model.log_density(a, sample[r]) - model.log_density(b, sample[r]);
    log_h = [llr = std::move(llr)](double u) {
      std::vector<double> terms(llr.size());
      for (std::size_t r = 0; r < llr.size(); ++r) terms[r] = u * llr[r];
      return log_sum_exp(terms) - std::log(static_cast<double>(terms.size()));
    };
  }
  const auto [u, value] = boost::math::tools::brent_find_minima(log_h, 0.0, 1.0, std::numeric_limits<double>::digits);
  return {std::max(0.0, -value), u};
}

BayesRateInvariance bayes_rate_invariance(const LlrSystem& sys, const Prior& prior, double n_eff) {
  if (prior.size() != sys.model().space().size()) throw ValidationError("prior length does not match parameter space");
  if (!(n_eff > 0.0)) throw ValidationError("n_eff must be positive");
  BayesRateInvariance out;
  const auto dim = static_cast<Eigen::Index>(sys.dim());
  out.log_prior_ratio.resize(dim);
  for (Eigen::Index c = 0; c < dim; ++c)
    out.log_prior_ratio[c] = std::log(prior[sys.candidate()] / prior[sys.components()[static_cast<std::size_t>(c)]]);
  out.rate_without = alternative_rate(sys).rate;
  // Mean-scale threshold: sum_k X_k > -ln(pi_i/pi_j) means mean > -ratio/n.
  out.rate_with_prior = orthant_rate(sys, -out.log_prior_ratio / n_eff).rate;
  out.difference = std::abs(out.rate_with_prior - out.rate_without);
  return out;
}

double bias_bound(const ParameterSpace& space, ParamIndex truth, double probability) {
  if (truth >= space.size()) throw ValidationError("truth index out of range");
  if (!space.has_embedding()) throw ValidationError("bias bound requires a numeric parameter embedding");
  if (!(probability >= 0.0 && probability <= 1.0)) throw ValidationError("probability must lie in [0,1]");
  double sup = 0.0;
  for (ParamIndex j = 0; j < space.size(); ++j)
    if (j != truth) sup = std::max(sup, space.distance(j, truth));
  return sup * probability;
}

}  // namespace dpe
