#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "dpe/error.hpp"
#include "dpe/llr.hpp"

using namespace dpe;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Model example6() { return Model(ParameterSpace::from_scalars({1.0, -1.0}), GaussianKnownVar{1.0}); }

Model two_symbol() {
  return Model(ParameterSpace::from_labels({"fair", "biased"}), Categorical{{"a", "b"}, {{0.5, 0.5}, {0.9, 0.1}}});
}

Model three_symbol() {
  return Model(ParameterSpace::from_labels({"p", "q", "r"}),
               Categorical{{"x", "y", "z"}, {{0.2, 0.3, 0.5}, {0.45, 0.35, 0.2}, {0.6, 0.1, 0.3}}});
}

// One analytic system per family, with J >= 2 where the family allows it.
std::vector<LlrSystem> analytic_systems() {
  std::vector<LlrSystem> out;
  out.emplace_back(example6(), 0, 1);
  out.emplace_back(Model(ParameterSpace::from_scalars({0.0, 1.0, 5.0}), GaussianKnownVar{1.3}), 0, 1);
  out.emplace_back(Model(ParameterSpace::from_scalars({1.0, 2.0, 4.0}), Poisson{}), 0, 1);
  out.emplace_back(Model(ParameterSpace::from_scalars({1.0, 2.0, 3.0}), BernoulliPower{0.75}), 1, 2);
  out.emplace_back(two_symbol(), 0, 1);
  out.emplace_back(three_symbol(), 0, 2);
  out.emplace_back(three_symbol(), 1, 0);
  return out;
}

VectorXd random_vector(std::mt19937_64& rng, Eigen::Index dim, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  VectorXd v(dim);
  for (Eigen::Index k = 0; k < dim; ++k) v[k] = u(rng);
  return v;
}

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

}  // namespace

TEST_CASE("component ordering and dimension") {
  const LlrSystem sys(three_symbol(), 0, 1);
  CHECK(sys.dim() == 2);
  CHECK(sys.components() == std::vector<ParamIndex>{0, 2});
  CHECK(sys.truth_index() == 0u);
  CHECK_THROWS_AS(sys.lmgf(VectorXd::Zero(3)), ValidationError);
  CHECK_THROWS_AS(LlrSystem(three_symbol(), 3, 0), ValidationError);
  CHECK_THROWS_AS(LlrSystem(Model(ParameterSpace::from_labels({"only"}), Categorical{{"a"}, {{1.0}}}), 0, 0),
                  ValidationError);
}

TEST_CASE("lmgf reference values") {
  for (const auto& sys : analytic_systems()) CHECK(sys.lmgf(VectorXd::Zero(sys.dim())) == 0.0);

  const LlrSystem gauss(example6(), 0, 1);
  // Lambda(l) = -2l + 2l^2 for X = -2Y, Y ~ N(1, 1).
  CHECK(gauss.lmgf(vec({0.5})) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(gauss.lmgf(vec({1.5})) == doctest::Approx(-3.0 + 4.5).epsilon(1e-15));
  CHECK(gauss.lmgf_grad(vec({0.5}))[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(gauss.lmgf_grad(vec({0.0}))[0] == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(gauss.lmgf_hess(vec({0.3}))(0, 0) == doctest::Approx(4.0).epsilon(1e-15));

  const LlrSystem cat(two_symbol(), 0, 1);
  CHECK(std::abs(cat.lmgf(vec({1.0}))) < 1e-15);
  // Untilted gradient is the plain mean sum_y p0(y) ln(p1(y)/p0(y)).
  const double mean = 0.5 * std::log(0.9 / 0.5) + 0.5 * std::log(0.1 / 0.5);
  CHECK(cat.mean()[0] == doctest::Approx(mean).epsilon(1e-14));

  const LlrSystem pois(Model(ParameterSpace::from_scalars({2.0, 1.0}), Poisson{}), 0, 1);
  // X = Y ln(1/2) + 1, Y ~ Poisson(2): E X = 1 - 2 ln 2.
  CHECK(pois.mean()[0] == doctest::Approx(1.0 - 2.0 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("analytic derivatives match central finite differences") {
  std::mt19937_64 rng(17);
  const double h = 1e-5;
  for (const auto& sys : analytic_systems()) {
    const auto dim = static_cast<Eigen::Index>(sys.dim());
    for (int t = 0; t < 20; ++t) {
      const VectorXd l = random_vector(rng, dim, -1.0, 1.5);
      const VectorXd g = sys.lmgf_grad(l);
      const MatrixXd hess = sys.lmgf_hess(l);
      for (Eigen::Index k = 0; k < dim; ++k) {
        VectorXd lp = l, lm = l;
        lp[k] += h;
        lm[k] -= h;
        const double fd = (sys.lmgf(lp) - sys.lmgf(lm)) / (2 * h);
        CHECK(std::abs(fd - g[k]) <= 1e-6 * std::max(1.0, std::abs(g[k])));
        const VectorXd fdg = (sys.lmgf_grad(lp) - sys.lmgf_grad(lm)) / (2 * h);
        for (Eigen::Index c = 0; c < dim; ++c)
          CHECK(std::abs(fdg[c] - hess(c, k)) <= 1e-6 * std::max(1.0, std::abs(hess(c, k))));
      }
    }
  }
}

TEST_CASE("lmgf is convex with a symmetric PSD Hessian") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& sys : analytic_systems()) {
    const auto dim = static_cast<Eigen::Index>(sys.dim());
    for (int t = 0; t < 100; ++t) {
      const VectorXd a = random_vector(rng, dim, -2.0, 2.0);
      const VectorXd b = random_vector(rng, dim, -2.0, 2.0);
      const double s = unit(rng);
      CHECK(sys.lmgf(s * a + (1 - s) * b) <= s * sys.lmgf(a) + (1 - s) * sys.lmgf(b) + 1e-10);
      const MatrixXd hess = sys.lmgf_hess(a);
      CHECK((hess - hess.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(hess).eigenvalues().minCoeff() >= -1e-9);
    }
  }
}

TEST_CASE("cramer transform") {
  SUBCASE("vanishes at the mean") {
    for (const auto& sys : analytic_systems()) {
      const auto r = cramer_transform(sys, sys.mean());
      CHECK(std::abs(r.value) <= 1e-10);
      CHECK(r.lambda.norm() <= 1e-12);
    }
  }
  SUBCASE("gaussian closed form") {
    const LlrSystem sys(example6(), 0, 1);
    const auto r = cramer_transform(sys, vec({0.0}));
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.lambda[0] == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("categorical agrees with a grid search") {
    const LlrSystem sys(two_symbol(), 0, 1);
    double best = -1e300;
    for (long k = -200000; k <= 200000; ++k) {
      const double l = k * 1e-4;
      best = std::max(best, -sys.lmgf(vec({l})));
    }
    CHECK(std::abs(cramer_transform(sys, vec({0.0})).value - best) <= 1e-8);
  }
  SUBCASE("diverges outside the support hull") {
    const LlrSystem sys(two_symbol(), 0, 1);
    CHECK(std::isinf(cramer_transform(sys, vec({5.0})).value));
  }
  SUBCASE("nonnegative and Fenchel-tight at exposed points") {
    std::mt19937_64 rng(23);
    for (const auto& sys : analytic_systems()) {
      const auto dim = static_cast<Eigen::Index>(sys.dim());
      for (int t = 0; t < 25; ++t) {
        const VectorXd l = random_vector(rng, dim, -1.0, 1.5);
        const VectorXd y = sys.lmgf_grad(l);
        const double expected = y.dot(l) - sys.lmgf(l);
        const auto r = cramer_transform(sys, y);
        CHECK(r.value >= -1e-10);
        CHECK(std::abs(r.value - expected) <= 1e-7);
      }
    }
  }
}

TEST_CASE("hellinger transform") {
  const auto cat = three_symbol();
  CHECK(hellinger_transform(cat, std::vector<double>{1.0, 0.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(hellinger_transform(example6(), std::vector<double>{0.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(hellinger_transform(cat, std::vector<double>{0.5, 0.0, 0.0}), ValidationError);

  SUBCASE("identity with the moment generating function") {
    std::mt19937_64 rng(8);
    for (ParamIndex truth = 0; truth < 3; ++truth)
      for (ParamIndex cand = 0; cand < 3; ++cand) {
        if (truth == cand) continue;
        const LlrSystem sys(cat, truth, cand);
        for (int t = 0; t < 50; ++t) {
          const VectorXd l = random_vector(rng, 2, -1.5, 1.5);
          const auto gamma = hellinger_exponents(sys, l);
          double total = 0.0;
          for (double g : gamma) total += g;
          CHECK(std::abs(total - 1.0) <= 1e-12);
          CHECK(check_hellinger_identity(sys, l) <= 1e-12);
        }
      }
    for (const auto& sys : analytic_systems()) {
      if (sys.truth_index() == sys.candidate()) continue;
      const VectorXd l = VectorXd::Constant(static_cast<Eigen::Index>(sys.dim()), 0.3);
      CHECK(check_hellinger_identity(sys, l) <= 1e-12);
    }
  }
  SUBCASE("two points: pairwise Chernoff integrand") {
    const auto m = two_symbol();
    for (double u : {0.1, 0.4, 0.75}) {
      const double direct = std::log(std::pow(0.9, u) * std::pow(0.5, 1 - u) + std::pow(0.1, u) * std::pow(0.5, 1 - u));
      CHECK(log_hellinger_transform(m, std::vector<double>{1 - u, u}) == doctest::Approx(direct).epsilon(1e-14));
    }
  }
  SUBCASE("identity undefined without a specified truth") {
    const std::vector<double> data{0.0, 1.0, 1.0};
    const LlrSystem sys(two_symbol(), data, 1);
    CHECK_THROWS_AS(check_hellinger_identity(sys, vec({0.5})), ValidationError);
    const LlrSystem self(two_symbol(), 1, 1);
    CHECK_THROWS_AS(check_hellinger_identity(self, vec({0.5})), ValidationError);
  }
}

TEST_CASE("empirical backend") {
  SUBCASE("matches the analytic lmgf on a grid") {
    const auto cat = three_symbol();
    const LlrSystem exact(cat, 0, 1);
    const LlrSystem approx(cat, 0, 1, LlrOptions{Backend::empirical, 1000000, 3});
    CHECK(approx.backend() == Backend::empirical);
    for (double a = -1.0; a <= 1.0 + 1e-12; a += 0.5)
      for (double b = -1.0; b <= 1.0 + 1e-12; b += 0.5) {
        const VectorXd l = vec({a, b});
        CHECK(std::abs(approx.lmgf(l) - exact.lmgf(l)) <= 5e-3);
      }
  }
  SUBCASE("deterministic after construction") {
    const auto m = example6();
    const LlrSystem a(m, 0, 1, LlrOptions{Backend::empirical, 5000, 9});
    const LlrSystem b(m, 0, 1, LlrOptions{Backend::empirical, 5000, 9});
    CHECK(a.lmgf(vec({0.4})) == b.lmgf(vec({0.4})));
  }
  SUBCASE("external truth sample") {
    const std::vector<double> data{0.0, 0.0, 1.0, 1.0};
    const LlrSystem sys(two_symbol(), data, 1);
    CHECK_FALSE(sys.truth_index().has_value());
    // Empirical law puts mass 1/2 on each symbol, so it equals the truth-0 law.
    const LlrSystem exact(two_symbol(), 0, 1);
    CHECK(sys.lmgf(vec({0.7})) == doctest::Approx(exact.lmgf(vec({0.7}))).epsilon(1e-14));
    CHECK_THROWS_AS(LlrSystem(two_symbol(), std::vector<double>{}, 1), ValidationError);
  }
  SUBCASE("families without closed forms require it") {
    const Model emp(ParameterSpace::from_labels({"a", "b"}),
                    Empirical{[](ParamIndex i, double y) { return -0.5 * (y - double(i)) * (y - double(i)); }, {}});
    CHECK_THROWS_AS(LlrSystem(emp, 0, 1), CapabilityError);
    const std::vector<double> data{0.1, -0.3, 0.5};
    const LlrSystem sys(emp, data, 1);
    CHECK(sys.lmgf(vec({0.0})) == 0.0);
  }
}
