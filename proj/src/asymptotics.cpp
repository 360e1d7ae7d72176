#include "dpe/asymptotics.hpp"

#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>

#include "dpe/error.hpp"
#include "dpe/numeric.hpp"
#include "dpe/parallel.hpp"
#include "dpe/rates.hpp"

namespace dpe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kQuadTol = 1e-9;
constexpr unsigned kQuadDepth = 25;
constexpr double kWidth = 14.0;  // integration half-width in conditional sd units

struct Root {
  double mu, lmgf, curvature;
};

Root two_point_root(const LlrSystem& sys) {
  if (sys.dim() != 1) throw ValidationError("two-point asymptotic needs a two-point parameter space (J = 1)");
  auto deriv = [&](double l) { return sys.lmgf_grad(VectorXd::Constant(1, l))(0); };

  double lo = 1e-6;
  double hi = 1.0;
  if (deriv(lo) >= 0.0)
    throw ValidationError("Lambda' is nonnegative at the origin: the candidate is not a misidentification");
  const double max_hi = std::ldexp(1.0, 40);
  double dhi = deriv(hi);
  while (!(dhi > 0.0)) {
    lo = hi;
    hi *= 2.0;
    if (hi > max_hi) throw ConvergenceError("no sign change of Lambda' below 2^40; degenerate pair");
    dhi = deriv(hi);
  }
  if (std::isnan(dhi)) throw ConvergenceError("Lambda' undefined while bracketing the root");

  std::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(50);
  const auto [a, b] = boost::math::tools::toms748_solve(deriv, lo, hi, tol, iters);
  if (iters >= 200) throw ConvergenceError("root of Lambda' not found");
  const double mu = 0.5 * (a + b);
  const VectorXd at = VectorXd::Constant(1, mu);
  return {mu, sys.lmgf(at), sys.lmgf_hess(at)(0, 0)};
}

double two_point_log(const Root& r, double n) {
  return n * r.lmgf - std::log(r.mu) - 0.5 * (kLog2Pi + std::log(n * r.curvature));
}

struct Saddle {
  double rate;
  VectorXd u, y;
  MatrixXd cov;
  double det;
};

Saddle dominating_point(const LlrSystem& sys) {
  if (sys.dim() > 3) throw ValidationError("saddlepoint approximation supports at most J = 3 alternatives");
  const auto r = alternative_rate(sys);
  if (r.misidentified || !(r.rate > 0.0))
    throw ValidationError("no dominating point: the rate is zero for this candidate");
  Saddle s{r.rate, r.dual_certificate, r.dominating_point, sys.lmgf_hess(r.dual_certificate), 0.0};
  s.det = s.cov.determinant();
  if (!(s.det > 1e-14 * std::max(1.0, s.cov.cwiseAbs().maxCoeff())))
    throw ValidationError("tilted covariance is singular at the dominating point");
  return s;
}

double saddle_log(const Saddle& s, double n) {
  const double rn = std::sqrt(n);
  if (s.u.size() == 1) {
    return -n * s.rate - std::log(s.u(0)) - 0.5 * (kLog2Pi + std::log(n * s.cov(0, 0)));
  }
  VectorXd lower = -rn * s.y;
  // Active constraints sit exactly on the boundary.
  for (Eigen::Index j = 0; j < lower.size(); ++j)
    if (s.u(j) > 0.0) lower(j) = 0.0;
  return -n * s.rate + log_tilted_orthant(rn * s.u, lower, s.cov);
}

class OrthantIntegral {
 public:
  OrthantIntegral(const VectorXd& c, const VectorXd& lower, const MatrixXd& cov) : c_(c), lower_(lower) {
    const auto d = c.size();
    for (Eigen::Index k = 0; k < d; ++k) {
      VectorXd beta = VectorXd::Zero(k);
      double var = cov(k, k);
      if (k > 0) {
        const MatrixXd head = cov.topLeftCorner(k, k);
        const VectorXd cross = cov.col(k).head(k);
        beta = head.ldlt().solve(cross);
        var -= cross.dot(beta);
      }
      if (!(var > 0.0)) throw ValidationError("tilted covariance is not positive definite");
      beta_.push_back(beta);
      sd_.push_back(std::sqrt(var));
    }
  }

  double log_value() const {
    std::array<double, 3> z{};
    return level(0, z);
  }

 private:
  double level(Eigen::Index k, std::array<double, 3>& z) const {
    double m = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) m += beta_[k](j) * z[j];
    const double s = sd_[k];
    const double c = c_(k);
    const double l = lower_(k);
    if (k + 1 == c_.size()) {
      return -c * m + 0.5 * c * c * s * s + log_normal_cdf(-((l - m) / s + c * s));
    }
    auto log_f = [&](double t) {
      const double r = (t - m) / s;
      z[k] = t;
      return -0.5 * r * r - std::log(s) - 0.5 * kLog2Pi - c * t + level(k + 1, z);
    };
    const double center = m - c * s * s;
    const double lo = std::max(l, center - kWidth * s);
    const double hi = std::max(lo, center) + kWidth * s;
    const double ref = log_f(std::min(std::max(center, lo), hi));
    auto f = [&](double t) { return std::exp(log_f(t) - ref); };
    const double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, kQuadDepth, kQuadTol);
    return ref + std::log(val);
  }

  VectorXd c_, lower_;
  std::vector<VectorXd> beta_;
  std::vector<double> sd_;
};

}  // namespace

double crude_ld(double rate, double n) { return -n * rate; }

TwoPointAsymptotic exact_asymptotic_two_point(const LlrSystem& sys, double n) {
  if (!(n >= 1.0)) throw ValidationError("sample size must be at least 1");
  const Root r = two_point_root(sys);
  return {two_point_log(r, n), r.mu, r.lmgf, r.curvature, sys.model().is_lattice()};
}

double log_tilted_orthant(const VectorXd& c, const VectorXd& lower, const MatrixXd& cov) {
  const auto d = c.size();
  if (d < 1 || d > 3) throw ValidationError("orthant integral supports dimension 1 to 3");
  if (lower.size() != d || cov.rows() != d || cov.cols() != d) throw ValidationError("orthant integral: size mismatch");
  return OrthantIntegral(c, lower, cov).log_value();
}

SaddlepointResult saddlepoint_leading(const LlrSystem& sys, double n) {
  if (!(n >= 1.0)) throw ValidationError("sample size must be at least 1");
  const Saddle s = dominating_point(sys);
  return {saddle_log(s, n), s.rate, s.u, s.y, s.cov, s.det};
}

ApproxCurve approx_curve(const LlrSystem& sys, const std::vector<double>& n_grid, unsigned threads) {
  for (double n : n_grid)
    if (!(n >= 1.0)) throw ValidationError("sample size must be at least 1");

  ApproxCurve out;
  out.n_grid = n_grid;
  out.lattice_warning = sys.model().is_lattice();
  const auto count = n_grid.size();

  std::optional<Saddle> saddle;
  if (sys.dim() <= 3) {
    saddle = dominating_point(sys);
    out.rate = saddle->rate;
    out.u = saddle->u;
    out.hessian_det = saddle->det;
  } else {
    out.rate = alternative_rate(sys).rate;
  }
  std::optional<Root> root;
  if (sys.dim() == 1) {
    root = two_point_root(sys);
    out.mu = root->mu;
    out.curvature = root->curvature;
  }

  out.crude.resize(count);
  std::vector<double> sp(count), j1(count);
  parallel_for(count, resolve_threads(threads), [&](std::size_t k) {
    const double n = n_grid[k];
    out.crude[k] = crude_ld(out.rate, n);
    if (saddle) sp[k] = saddle_log(*saddle, n);
    if (root) j1[k] = two_point_log(*root, n);
  });
  if (saddle) out.saddlepoint = std::move(sp);
  if (root) out.exact_j1 = std::move(j1);
  return out;
}

}  // namespace dpe
