#include "dpe/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "dpe/error.hpp"
#include "dpe/numeric.hpp"
#include "dpe/parallel.hpp"
#include "dpe/rates.hpp"

namespace dpe {

namespace {

constexpr double kTieTol = 1e-12;

void require_pairs(const Model& model) {
  if (model.space().size() < 2) throw ValidationError("bounds need at least two parameter points");
}

void check_index(const Model& model, ParamIndex truth) {
  if (truth >= model.space().size()) throw ValidationError("truth index out of range");
}

double cr_from_matrix(const Eigen::MatrixXd& kl, ParamIndex truth) {
  double best = kInf;
  for (Eigen::Index j = 0; j < kl.rows(); ++j)
    if (static_cast<ParamIndex>(j) != truth) best = std::min(best, kl(j, static_cast<Eigen::Index>(truth)));
  return -best;
}

}  // namespace

double chapman_robbins_bound(const Model& model, ParamIndex truth) {
  require_pairs(model);
  check_index(model, truth);
  double best = kInf;
  for (ParamIndex j = 0; j < model.space().size(); ++j)
    if (j != truth) best = std::min(best, kl_divergence(model, j, truth));
  return -best;
}

double minimax_bound(const Model& model) {
  require_pairs(model);
  double best = kInf;
  const auto size = model.space().size();
  for (ParamIndex a = 0; a < size; ++a)
    for (ParamIndex b = a + 1; b < size; ++b) best = std::min(best, chernoff_information(model, a, b).information);
  return -best;
}

BoundsReport bounds_report(const Model& model, ParamIndex truth, unsigned threads) {
  require_pairs(model);
  check_index(model, truth);
  const auto size = model.space().size();
  const auto dim = static_cast<Eigen::Index>(size);

  BoundsReport out;
  out.truth = truth;
  out.kl = Eigen::MatrixXd::Zero(dim, dim);
  out.chernoff = Eigen::MatrixXd::Zero(dim, dim);
  parallel_for(size * size, resolve_threads(threads), [&](std::size_t k) {
    const ParamIndex a = k / size;
    const ParamIndex b = k % size;
    if (a == b) return;
    out.kl(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = kl_divergence(model, a, b);
    if (a < b)
      out.chernoff(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          chernoff_information(model, a, b).information;
  });
  out.chernoff.triangularView<Eigen::StrictlyLower>() = out.chernoff.transpose().triangularView<Eigen::StrictlyLower>();

  for (ParamIndex t = 0; t < size; ++t) out.cr_by_truth.push_back(cr_from_matrix(out.kl, t));
  out.cr_rate_bound = out.cr_by_truth[truth];
  out.inaccuracy_cap = -out.cr_rate_bound;
  for (ParamIndex j = 0; j < size; ++j) {
    if (j == truth) continue;
    const double v = out.kl(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(truth));
    if (std::abs(v - out.inaccuracy_cap) <= kTieTol * std::max(1.0, v)) out.cr_argmax.push_back(j);
  }

  double min_c = kInf;
  for (Eigen::Index a = 0; a < dim; ++a)
    for (Eigen::Index b = a + 1; b < dim; ++b) min_c = std::min(min_c, out.chernoff(a, b));
  out.minimax_rate_bound = -min_c;
  return out;
}

ExponentFit fit_exponent(const std::vector<double>& n_grid, const std::vector<double>& log_probs) {
  if (n_grid.size() != log_probs.size()) throw ValidationError("grid and probability lengths differ");
  if (n_grid.size() < 4) throw ValidationError("exponent fit needs at least 4 grid points");
  ExponentFit fit;
  for (double lp : log_probs) {
    if (std::isnan(lp) || lp > 0.0) throw ValidationError("log-probabilities must be <= 0");
    if (lp == kNegInf) fit.vanishing = true;
  }
  if (fit.vanishing) {
    fit.slope = kNegInf;
    return fit;
  }
  const auto rows = static_cast<Eigen::Index>(n_grid.size());
  Eigen::MatrixXd design(rows, 3);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const double n = n_grid[static_cast<std::size_t>(k)];
    if (!(n > 0.0)) throw ValidationError("sample sizes must be positive");
    design(k, 0) = 1.0;
    design(k, 1) = n;
    design(k, 2) = std::log(n);
    rhs(k) = log_probs[static_cast<std::size_t>(k)];
  }
  const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(rhs);
  fit.intercept = coef(0);
  fit.slope = coef(1);
  fit.log_n_coef = coef(2);
  return fit;
}

EfficiencyVerdict efficiency_verdict(const std::vector<double>& n_grid,
                                     const std::vector<std::vector<double>>& log_probs, const BoundsReport& bounds,
                                     double tol) {
  if (log_probs.size() != bounds.cr_by_truth.size())
    throw ValidationError("need one probability curve per parameter point");
  EfficiencyVerdict out;
  std::vector<double> worst(n_grid.size(), kNegInf);
  for (std::size_t t = 0; t < log_probs.size(); ++t) {
    const auto fit = fit_exponent(n_grid, log_probs[t]);
    out.per_truth.push_back(fit);
    out.attains_cr_by_truth.push_back(!fit.vanishing && std::abs(fit.slope - bounds.cr_by_truth[t]) <= tol);
    for (std::size_t k = 0; k < n_grid.size(); ++k) worst[k] = std::max(worst[k], log_probs[t][k]);
  }
  out.worst_case = fit_exponent(n_grid, worst);
  out.attains_cr = out.attains_cr_by_truth[bounds.truth];
  out.attains_minimax = !out.worst_case.vanishing && std::abs(out.worst_case.slope - bounds.minimax_rate_bound) <= tol;
  return out;
}

}  // namespace dpe
