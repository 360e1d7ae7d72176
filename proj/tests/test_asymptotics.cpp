#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dpe/asymptotics.hpp"
#include "dpe/error.hpp"
#include "dpe/numeric.hpp"
#include "dpe/rates.hpp"

using namespace dpe;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Model example6() { return Model(ParameterSpace::from_scalars({1.0, -1.0}), GaussianKnownVar{1.0}); }

// Five-symbol, three-point model; both constraints are active at the dominating point.
Model three_point_categorical() {
  return Model(ParameterSpace::from_labels({"t0", "t1", "t2"}),
               Categorical{{"a", "b", "c", "d", "e"},
                           {{0.347, 0.271, 0.238, 0.039, 0.105},
                            {0.423, 0.091, 0.182, 0.12, 0.184},
                            {0.251, 0.127, 0.148, 0.295, 0.179}}});
}

// ln Phi(-x), multiprecision reference values.
constexpr double kLogPhiM5 = -15.0649983939887257;
constexpr double kLogPhiM10 = -53.2312851505124706;
constexpr double kLogPhiM20 = -203.917155371097264;

}  // namespace

TEST_CASE("crude estimate is -n I") {
  CHECK(crude_ld(0.5, 10) == doctest::Approx(-5.0));
  CHECK(crude_ld(0.0, 37) == 0.0);
  // Overestimates the Gaussian tail by the polynomial prefactor.
  CHECK(crude_ld(0.5, 100) == doctest::Approx(-50.0));
  CHECK(crude_ld(0.5, 100) > kLogPhiM10);
}

TEST_CASE("two-point asymptotic on the symmetric Gaussian pair") {
  const LlrSystem sys(example6(), 0, 1);
  for (double n : {1.0, 10.0, 100.0}) {
    const auto a = exact_asymptotic_two_point(sys, n);
    CHECK(a.mu == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(a.lmgf_at_mu == doctest::Approx(-0.5).epsilon(1e-10));
    CHECK(a.curvature == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(a.log_prob == doctest::Approx(-n / 2 - 0.5 * std::log(2 * std::numbers::pi * n)).epsilon(1e-12));
    CHECK_FALSE(a.lattice_warning);
  }
}

TEST_CASE("two-point asymptotic tracks the normal tail") {
  const LlrSystem sys(example6(), 0, 1);
  auto rel_err = [&](double n, double log_true) {
    return std::abs(std::exp(exact_asymptotic_two_point(sys, n).log_prob - log_true) - 1.0);
  };
  const double e25 = rel_err(25, kLogPhiM5);
  const double e100 = rel_err(100, kLogPhiM10);
  const double e400 = rel_err(400, kLogPhiM20);
  CHECK(e100 <= 0.015);
  CHECK(e400 < e100);
  CHECK(e100 <= 0.5 * e25);
  CHECK(e400 <= 0.5 * e100);
}

TEST_CASE("two-point asymptotic is invariant under relabelling the pair") {
  const LlrSystem a(Model(ParameterSpace::from_scalars({1.0, -1.0}), GaussianKnownVar{1.0}), 0, 1);
  const LlrSystem b(Model(ParameterSpace::from_scalars({-1.0, 1.0}), GaussianKnownVar{1.0}), 0, 1);
  for (double n : {3.0, 30.0, 300.0})
    CHECK(exact_asymptotic_two_point(a, n).log_prob == doctest::Approx(exact_asymptotic_two_point(b, n).log_prob));
}

TEST_CASE("two-point root agrees with the rate program") {
  const Model poisson(ParameterSpace::from_scalars({2.0, 3.5}), Poisson{});
  const LlrSystem sys(poisson, 0, 1);
  const auto a = exact_asymptotic_two_point(sys, 50);
  const auto r = alternative_rate(sys);
  CHECK(a.lmgf_at_mu == doctest::Approx(-r.rate).epsilon(1e-9));
  CHECK(a.mu == doctest::Approx(r.dual_certificate(0)).epsilon(1e-6));
  CHECK(std::abs(sys.lmgf_grad(VectorXd::Constant(1, a.mu))(0)) < 1e-10);
  CHECK(a.lattice_warning);
}

TEST_CASE("two-point asymptotic rejects bad inputs") {
  CHECK_THROWS_AS(exact_asymptotic_two_point(LlrSystem(three_point_categorical(), 0, 1), 10), ValidationError);
  // Candidate equal to the truth in law: Lambda' never starts negative.
  const Model twins(ParameterSpace::from_labels({"x", "y"}), Categorical{{"a", "b"}, {{0.3, 0.7}, {0.3, 0.7}}});
  CHECK_THROWS_AS(exact_asymptotic_two_point(LlrSystem(twins, 0, 1), 10), ValidationError);
  CHECK_THROWS_AS(exact_asymptotic_two_point(LlrSystem(example6(), 0, 1), 0.5), ValidationError);
}

TEST_CASE("tilted orthant integral against closed forms") {
  SUBCASE("one dimension") {
    for (double a : {0.1, 1.0, 4.0, 30.0}) {
      const double expect = 0.5 * a * a + log_normal_cdf(-a);
      CHECK(log_tilted_orthant(VectorXd::Constant(1, a), VectorXd::Zero(1), MatrixXd::Identity(1, 1)) ==
            doctest::Approx(expect).epsilon(1e-10));
    }
  }
  SUBCASE("independent components factor") {
    const VectorXd c{{0.7, 2.5}};
    const VectorXd lo{{0.0, -1.0}};
    const MatrixXd cov{{2.0, 0.0}, {0.0, 0.5}};
    double expect = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double s = std::sqrt(cov(k, k));
      expect += 0.5 * c(k) * c(k) * s * s + log_normal_cdf(-(lo(k) / s + c(k) * s));
    }
    CHECK(log_tilted_orthant(c, lo, cov) == doctest::Approx(expect).epsilon(1e-8));
  }
  SUBCASE("orthant probabilities") {
    for (double rho : {-0.6, 0.0, 0.3, 0.9}) {
      const MatrixXd cov{{1.0, rho}, {rho, 1.0}};
      const double p2 = 0.25 + std::asin(rho) / (2 * std::numbers::pi);
      CHECK(std::exp(log_tilted_orthant(VectorXd::Zero(2), VectorXd::Zero(2), cov)) ==
            doctest::Approx(p2).epsilon(1e-8));
    }
    for (double rho : {-0.3, 0.2, 0.7}) {
      MatrixXd cov = MatrixXd::Constant(3, 3, rho);
      cov.diagonal().setOnes();
      const double p3 = 0.125 + 3 * std::asin(rho) / (4 * std::numbers::pi);
      CHECK(std::exp(log_tilted_orthant(VectorXd::Zero(3), VectorXd::Zero(3), cov)) ==
            doctest::Approx(p3).epsilon(1e-7));
    }
  }
  CHECK_THROWS_AS(log_tilted_orthant(VectorXd::Zero(4), VectorXd::Zero(4), MatrixXd::Identity(4, 4)),
                  ValidationError);
}

TEST_CASE("saddlepoint with one alternative reduces to the two-point formula") {
  const LlrSystem sys(example6(), 0, 1);
  for (double n : {10.0, 25.0, 100.0, 1000.0}) {
    const double ratio =
        std::exp(saddlepoint_leading(sys, n).log_prob - exact_asymptotic_two_point(sys, n).log_prob);
    CHECK(std::abs(ratio - 1.0) <= 1e-6);
  }
}

TEST_CASE("saddlepoint with two alternatives against exact enumeration") {
  const LlrSystem sys(three_point_categorical(), 0, 2);
  const auto s8 = saddlepoint_leading(sys, 8);
  CHECK(s8.u.minCoeff() > 0.1);  // both constraints active
  CHECK(s8.rate == doctest::Approx(0.0955076964149007).epsilon(1e-8));
  CHECK(s8.hessian_det > 0.0);

  // Exact P(theta_hat = t2) under t0 by enumerating count vectors.
  const double exact[] = {0.05034463566326846, 0.028660211018613643, 0.017176784033750996};
  // Same integral by independent adaptive quadrature.
  const double reference[] = {-2.8797371171226698, -3.445455471907248, -3.970519827882355};
  const double ns[] = {8, 12, 16};
  double prev = INFINITY;
  for (int k = 0; k < 3; ++k) {
    const double lp = saddlepoint_leading(sys, ns[k]).log_prob;
    CHECK(lp == doctest::Approx(reference[k]).epsilon(1e-6));
    const double gap = std::abs(lp - std::log(exact[k]));
    if (k == 0) CHECK(gap < std::log(2.0));
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("saddlepoint rejects unsupported systems") {
  const Model twins(ParameterSpace::from_labels({"x", "y"}), Categorical{{"a", "b"}, {{0.3, 0.7}, {0.3, 0.7}}});
  CHECK_THROWS_AS(saddlepoint_leading(LlrSystem(twins, 0, 1), 10), ValidationError);
  const Model five(ParameterSpace::from_scalars({0.0, 1.0, 2.0, 3.0, 4.0}), GaussianKnownVar{1.0});
  CHECK_THROWS_AS(saddlepoint_leading(LlrSystem(five, 0, 2), 10), ValidationError);
}

TEST_CASE("approximations are negative and decreasing in n") {
  const std::vector<double> grid{1, 2, 5, 10, 20, 50, 100, 200};
  for (const auto& [model, cand] : {std::pair{example6(), ParamIndex{1}}, std::pair{three_point_categorical(), ParamIndex{1}},
                                    std::pair{three_point_categorical(), ParamIndex{2}}}) {
    const auto curve = approx_curve(LlrSystem(model, 0, cand), grid, 2);
    REQUIRE(curve.saddlepoint);
    CHECK(curve.exact_j1.has_value() == (model.space().size() == 2));
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(curve.crude[k] < 0.0);
      CHECK((*curve.saddlepoint)[k] < 0.0);
      if (curve.exact_j1) CHECK((*curve.exact_j1)[k] < 0.0);
      if (k == 0) continue;
      CHECK(curve.crude[k] < curve.crude[k - 1]);
      CHECK((*curve.saddlepoint)[k] < (*curve.saddlepoint)[k - 1]);
      if (curve.exact_j1) CHECK((*curve.exact_j1)[k] < (*curve.exact_j1)[k - 1]);
    }
  }
}

TEST_CASE("approx curve does not depend on the thread count") {
  const std::vector<double> grid{3, 7, 11, 19, 40};
  const LlrSystem sys(three_point_categorical(), 0, 2);
  const auto a = approx_curve(sys, grid, 1);
  const auto b = approx_curve(sys, grid, 4);
  CHECK(a.crude == b.crude);
  CHECK(*a.saddlepoint == *b.saddlepoint);
  CHECK(a.lattice_warning);
}

TEST_CASE("log tail probability sits half a log-order below the crude estimate") {
  // Gaussian pair: P = Phi(-sqrt(n)), I = 1/2. Least-squares slope of ln P + n I on ln n.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int n = 20; n <= 200; n += 10) {
    const double x = std::log(n);
    const double y = log_normal_cdf(-std::sqrt(n)) + 0.5 * n;
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++count;
  }
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  CHECK(slope >= -0.65);
  CHECK(slope <= -0.35);
}
