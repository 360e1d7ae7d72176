#include "dpe/convex.hpp"

#include <array>
#include <cmath>

namespace dpe {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double projected_grad_norm(const VectorXd& x, const VectorXd& g, bool nonneg) {
  double norm = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double pg = (nonneg && x[j] <= 0.0) ? std::min(g[j], 0.0) : g[j];
    norm = std::max(norm, std::abs(pg));
  }
  return norm;
}

SolverResult solve(const SmoothFunction& f, VectorXd x, const SolverOptions& opts, bool nonneg) {
  const auto project = [nonneg](VectorXd v) -> VectorXd {
    if (nonneg) v = v.cwiseMax(0.0);
    return v;
  };
  constexpr double kArmijo = 1e-4;
  // Slack for evaluation noise; long log-sum-exp reductions lose several digits.
  constexpr double kFlat = 1e-11;

  SolverResult res;
  x = project(std::move(x));
  double fx = f.value(x);
  VectorXd g = f.gradient(x);
  double pg = projected_grad_norm(x, g, nonneg);

  const Eigen::Index dim = x.size();
  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    if (pg <= opts.grad_tol) {
      res.converged = true;
      break;
    }
    if (x.norm() > opts.divergence_radius) {
      res.unbounded = true;
      break;
    }

    // Constraints that are (nearly) tight and pushing outward are held fixed.
    const double eps = std::min(1e-8, (x - project(x - g)).norm());
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < dim; ++j)
      if (!nonneg || x[j] > eps || g[j] <= 0.0) free.push_back(j);

    VectorXd newton = -g;
    if (!free.empty()) {
      const MatrixXd h = f.hessian(x);
      const auto nf = static_cast<Eigen::Index>(free.size());
      MatrixXd hff(nf, nf);
      VectorXd gf(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        gf[a] = g[free[a]];
        for (Eigen::Index b = 0; b < nf; ++b) hff(a, b) = h(free[a], free[b]);
      }
      const double scale = std::max(1.0, hff.diagonal().cwiseAbs().maxCoeff());
      hff.diagonal().array() += 1e-12 * scale;
      const VectorXd df = hff.ldlt().solve(-gf);
      if (df.allFinite() && gf.dot(df) < 0.0)
        for (Eigen::Index a = 0; a < nf; ++a) newton[free[a]] = df[a];
    }

    bool accepted = false;
    const VectorXd steepest = -g;
    for (const VectorXd* dir : std::array<const VectorXd*, 2>{&newton, &steepest}) {
      const VectorXd& d = *dir;
      double t = 1.0;
      for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
        const VectorXd xt = project(x + t * d);
        const double ft = f.value(xt);
        if (!std::isfinite(ft)) continue;
        bool ok = ft <= fx + kArmijo * g.dot(xt - x);
        VectorXd gt;
        if (!ok && ft <= fx + kFlat * std::max(1.0, std::abs(fx))) {
          // Near the optimum the value is flat to rounding; accept if the gradient improves.
          gt = f.gradient(xt);
          ok = projected_grad_norm(xt, gt, nonneg) < pg;
        }
        if (ok) {
          if (gt.size() == 0) gt = f.gradient(xt);
          x = xt;
          fx = ft;
          g = std::move(gt);
          pg = projected_grad_norm(x, g, nonneg);
          accepted = true;
          break;
        }
      }
      if (accepted) break;
    }
    if (!accepted) break;
  }
  res.converged = res.converged || pg <= opts.grad_tol;
  res.x = std::move(x);
  res.value = fx;
  res.grad_norm = pg;
  return res;
}

}  // namespace

SolverResult minimize_convex(const SmoothFunction& f, Eigen::VectorXd x0, const SolverOptions& opts) {
  return solve(f, std::move(x0), opts, false);
}

SolverResult minimize_convex_nonneg(const SmoothFunction& f, Eigen::VectorXd x0, const SolverOptions& opts) {
  return solve(f, std::move(x0), opts, true);
}

}  // namespace dpe
