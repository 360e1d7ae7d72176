#include "dpe/llr.hpp"

#include <cmath>
#include <numeric>

#include "dpe/error.hpp"
#include "dpe/numeric.hpp"

namespace dpe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<ParamIndex> other_indices(std::size_t size, ParamIndex candidate) {
  std::vector<ParamIndex> comps;
  for (ParamIndex j = 0; j < size; ++j)
    if (j != candidate) comps.push_back(j);
  return comps;
}

}  // namespace

LlrSystem::LlrSystem(Model model, ParamIndex truth, ParamIndex candidate, LlrOptions opts)
    : model_(std::move(model)), truth_(truth), candidate_(candidate), backend_(opts.backend) {
  const auto& space = model_.space();
  if (truth >= space.size() || candidate >= space.size()) throw ValidationError("LLR index out of range");
  if (space.alternatives() == 0) throw ValidationError("LLR system needs at least two parameter points");
  components_ = other_indices(space.size(), candidate);
  const auto n_comp = static_cast<Eigen::Index>(components_.size());

  if (backend_ == Backend::empirical) {
    if (opts.sample_size == 0) throw ValidationError("empirical backend needs a positive sample size");
    const auto sample = model_.sample(truth, opts.seed, 0, opts.sample_size);
    law_ = sample_law(model_, sample, candidate, components_);
    return;
  }
  if (!model_.capabilities().has_analytic_lmgf)
    throw CapabilityError(model_.family_name() + " family has no analytic log-MGF; use the empirical backend");

  if (const auto* g = std::get_if<GaussianKnownVar>(&model_.family())) {
    GaussianLaw law{VectorXd(n_comp), VectorXd(n_comp), space.scalar(truth), g->sigma * g->sigma};
    const double ti = space.scalar(candidate);
    for (Eigen::Index c = 0; c < n_comp; ++c) {
      const double tj = space.scalar(components_[c]);
      law.a[c] = (ti - tj) / law.var;
      law.b[c] = (tj * tj - ti * ti) / (2.0 * law.var);
    }
    law_ = std::move(law);
  } else if (std::holds_alternative<Poisson>(model_.family())) {
    PoissonLaw law{VectorXd(n_comp), VectorXd(n_comp), space.scalar(truth)};
    const double ti = space.scalar(candidate);
    for (Eigen::Index c = 0; c < n_comp; ++c) {
      const double tj = space.scalar(components_[c]);
      law.c[c] = std::log(ti / tj);
      law.d[c] = ti - tj;
    }
    law_ = std::move(law);
  } else {
    const auto table = model_.enumerate_support();
    const auto k = static_cast<Eigen::Index>(table.symbols.size());
    FiniteLaw law{MatrixXd(k, n_comp), VectorXd(k)};
    for (Eigen::Index s = 0; s < k; ++s) {
      law.log_weights[s] = std::log(table.pmf[truth][s]);
      const double li = std::log(table.pmf[candidate][s]);
      for (Eigen::Index c = 0; c < n_comp; ++c) law.atoms(s, c) = li - std::log(table.pmf[components_[c]][s]);
    }
    law_ = std::move(law);
  }
}

LlrSystem::LlrSystem(Model model, std::span<const Observation> truth_sample, ParamIndex candidate)
    : model_(std::move(model)), truth_(std::nullopt), candidate_(candidate), backend_(Backend::empirical) {
  if (candidate >= model_.space().size()) throw ValidationError("LLR index out of range");
  if (model_.space().alternatives() == 0) throw ValidationError("LLR system needs at least two parameter points");
  if (truth_sample.empty()) throw ValidationError("empirical truth sample is empty");
  components_ = other_indices(model_.space().size(), candidate);
  law_ = sample_law(model_, truth_sample, candidate, components_);
}

LlrSystem::FiniteLaw LlrSystem::sample_law(const Model& model, std::span<const Observation> sample,
                                           ParamIndex candidate, const std::vector<ParamIndex>& comps) {
  const auto m = static_cast<Eigen::Index>(sample.size());
  const auto n_comp = static_cast<Eigen::Index>(comps.size());
  FiniteLaw law{MatrixXd(m, n_comp), VectorXd::Constant(m, -std::log(static_cast<double>(m)))};
  for (Eigen::Index r = 0; r < m; ++r) {
    const double li = model.log_density(candidate, sample[r]);
    for (Eigen::Index c = 0; c < n_comp; ++c) law.atoms(r, c) = li - model.log_density(comps[c], sample[r]);
  }
  return law;
}

void LlrSystem::check_lambda(const VectorXd& lambda) const {
  if (lambda.size() != static_cast<Eigen::Index>(dim()))
    throw ValidationError("lambda has dimension " + std::to_string(lambda.size()) + ", expected " +
                          std::to_string(dim()));
  if (!lambda.allFinite()) throw ValidationError("lambda must be finite");
}

VectorXd LlrSystem::tilted_weights(const FiniteLaw& law, const VectorXd& lambda) const {
  VectorXd z = law.log_weights + law.atoms * lambda;
  const double m = z.maxCoeff();
  VectorXd w = (z.array() - m).exp();
  return w / w.sum();
}

double LlrSystem::lmgf(const VectorXd& lambda) const {
  check_lambda(lambda);
  if (lambda.isZero(0.0)) return 0.0;
  if (const auto* g = std::get_if<GaussianLaw>(&law_)) {
    const double s = lambda.dot(g->a);
    return s * g->mean + 0.5 * s * s * g->var + lambda.dot(g->b);
  }
  if (const auto* p = std::get_if<PoissonLaw>(&law_)) return p->mean * std::expm1(lambda.dot(p->c)) - lambda.dot(p->d);
  const auto& f = std::get<FiniteLaw>(law_);
  const VectorXd z = f.log_weights + f.atoms * lambda;
  return log_sum_exp(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

VectorXd LlrSystem::lmgf_grad(const VectorXd& lambda) const {
  check_lambda(lambda);
  if (const auto* g = std::get_if<GaussianLaw>(&law_)) {
    const double s = lambda.dot(g->a);
    return g->a * (g->mean + s * g->var) + g->b;
  }
  if (const auto* p = std::get_if<PoissonLaw>(&law_)) return p->c * (p->mean * std::exp(lambda.dot(p->c))) - p->d;
  const auto& f = std::get<FiniteLaw>(law_);
  return f.atoms.transpose() * tilted_weights(f, lambda);
}

MatrixXd LlrSystem::lmgf_hess(const VectorXd& lambda) const {
  check_lambda(lambda);
  if (const auto* g = std::get_if<GaussianLaw>(&law_)) return g->var * g->a * g->a.transpose();
  if (const auto* p = std::get_if<PoissonLaw>(&law_))
    return (p->mean * std::exp(lambda.dot(p->c))) * p->c * p->c.transpose();
  const auto& f = std::get<FiniteLaw>(law_);
  const VectorXd w = tilted_weights(f, lambda);
  const VectorXd mu = f.atoms.transpose() * w;
  const MatrixXd centered = f.atoms.rowwise() - mu.transpose();
  MatrixXd h = centered.transpose() * w.asDiagonal() * centered;
  return 0.5 * (h + h.transpose());
}

SmoothFunction LlrSystem::as_function() const {
  return {[this](const VectorXd& l) { return lmgf(l); }, [this](const VectorXd& l) { return lmgf_grad(l); },
          [this](const VectorXd& l) { return lmgf_hess(l); }};
}

CramerResult cramer_transform(const LlrSystem& sys, const VectorXd& y, const SolverOptions& opts) {
  if (y.size() != static_cast<Eigen::Index>(sys.dim())) throw ValidationError("Cramer transform argument has wrong dimension");
  // Minimize the convex Lambda(l) - <y, l>.
  const SmoothFunction f{[&](const VectorXd& l) { return sys.lmgf(l) - y.dot(l); },
                         [&](const VectorXd& l) { return VectorXd(sys.lmgf_grad(l) - y); },
                         [&](const VectorXd& l) { return sys.lmgf_hess(l); }};
  const auto res = minimize_convex(f, VectorXd::Zero(y.size()), opts);
  CramerResult out{-res.value, res.x, res.iterations, res.grad_norm};
  if (res.unbounded) {
    out.value = kInf;
    return out;
  }
  if (!res.converged)
    throw ConvergenceError("Cramer transform did not converge: gradient norm " + std::to_string(res.grad_norm));
  return out;
}

double log_hellinger_transform(const Model& model, std::span<const double> gamma) {
  const auto& space = model.space();
  if (gamma.size() != space.size()) throw ValidationError("Hellinger exponent vector has wrong length");
  const double total = std::accumulate(gamma.begin(), gamma.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("Hellinger exponents must sum to 1");

  if (const auto* g = std::get_if<GaussianKnownVar>(&model.family())) {
    double m = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < gamma.size(); ++j) {
      m += gamma[j] * space.scalar(j);
      m2 += gamma[j] * space.scalar(j) * space.scalar(j);
    }
    return -(m2 - m * m) / (2.0 * g->sigma * g->sigma);
  }
  if (std::holds_alternative<Poisson>(model.family())) {
    double log_geo = 0.0, lin = 0.0;
    for (std::size_t j = 0; j < gamma.size(); ++j) {
      log_geo += gamma[j] * std::log(space.scalar(j));
      lin += gamma[j] * space.scalar(j);
    }
    return std::exp(log_geo) - lin;
  }
  if (!model.capabilities().can_enumerate)
    throw CapabilityError(model.family_name() + " family has no closed-form Hellinger transform");
  const auto table = model.enumerate_support();
  std::vector<double> terms(table.symbols.size(), 0.0);
  for (std::size_t s = 0; s < terms.size(); ++s)
    for (std::size_t j = 0; j < gamma.size(); ++j)
      if (gamma[j] != 0.0) terms[s] += gamma[j] * std::log(table.pmf[j][s]);
  return log_sum_exp(terms);
}

double hellinger_transform(const Model& model, std::span<const double> gamma) {
  return std::exp(log_hellinger_transform(model, gamma));
}

std::vector<double> hellinger_exponents(const LlrSystem& sys, const VectorXd& lambda) {
  if (!sys.truth_index()) throw ValidationError("Hellinger identity requires a correctly specified truth");
  const ParamIndex truth = *sys.truth_index();
  if (truth == sys.candidate()) throw ValidationError("Hellinger identity is only defined for candidate != truth");
  if (lambda.size() != static_cast<Eigen::Index>(sys.dim())) throw ValidationError("lambda has wrong dimension");
  std::vector<double> gamma(sys.model().space().size(), 0.0);
  gamma[sys.candidate()] = lambda.sum();
  for (std::size_t c = 0; c < sys.dim(); ++c) gamma[sys.components()[c]] = -lambda[static_cast<Eigen::Index>(c)];
  gamma[truth] += 1.0;
  return gamma;
}

double check_hellinger_identity(const LlrSystem& sys, const VectorXd& lambda) {
  const auto gamma = hellinger_exponents(sys, lambda);
  return std::abs(std::exp(sys.lmgf(lambda)) - hellinger_transform(sys.model(), gamma));
}

}  // namespace dpe
