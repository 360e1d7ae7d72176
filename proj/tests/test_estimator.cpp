#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dpe/error.hpp"
#include "dpe/estimator.hpp"
#include "dpe/numeric.hpp"

using namespace dpe;

namespace {

Model example6() { return Model(ParameterSpace::from_scalars({1.0, -1.0}), GaussianKnownVar{1.0}); }

std::vector<Model> builtin_models() {
  return {
      Model(ParameterSpace::from_scalars({0.0, 0.5, 1.5}), GaussianKnownVar{1.0}),
      Model(ParameterSpace::from_scalars({1.0, 1.5, 3.0}), Poisson{}),
      Model(ParameterSpace::from_scalars({1.0, 2.0, 3.0}), BernoulliPower{0.75}),
      Model(ParameterSpace::from_labels({"p", "q", "r"}),
            Categorical{{"x", "y", "z"}, {{0.2, 0.3, 0.5}, {0.3, 0.3, 0.4}, {0.5, 0.3, 0.2}}}),
  };
}

}  // namespace

TEST_CASE("m_estimate follows the sign of the sample mean") {
  const Model m(ParameterSpace::from_scalars({-1.0, 1.0}), GaussianKnownVar{1.0});
  const std::vector<double> data{0.3, 0.1};
  const auto r = m_estimate(m, data);
  CHECK(r.chosen_index == 1);
  CHECK_FALSE(r.tie_occurred);
  CHECK(r.objective_values.size() == 2);
  CHECK_FALSE(r.posterior_log_weights.has_value());

  const std::vector<double> neg{-0.3, 0.1};
  CHECK(m_estimate(m, neg).chosen_index == 0);
  CHECK_THROWS_AS(m_estimate(m, std::vector<double>{}), ValidationError);
  const Model pois(ParameterSpace::from_scalars({1.0, 2.0}), Poisson{});
  CHECK_THROWS_AS(m_estimate(pois, std::vector<double>{1.0, -2.0}), ValidationError);
}

TEST_CASE("ties go to the smallest index") {
  const Model m(ParameterSpace::from_labels({"p", "q"}), Categorical{{"x", "y"}, {{0.2, 0.8}, {0.8, 0.2}}});
  const std::vector<double> data{0.0, 1.0};
  const auto r = m_estimate(m, data);
  CHECK(r.tie_occurred);
  CHECK(r.chosen_index == 0);
}

TEST_CASE("m_estimate is consistent") {
  for (const auto& model : builtin_models()) {
    for (ParamIndex truth = 0; truth < model.space().size(); ++truth) {
      int hits = 0;
      for (int rep = 0; rep < 100; ++rep) {
        const auto data = model.sample(truth, 2024, static_cast<std::uint64_t>(rep), 10000);
        hits += m_estimate(model, data).chosen_index == truth;
      }
      CAPTURE(model.family_name());
      CAPTURE(truth);
      CHECK(hits >= 99);
    }
  }
}

TEST_CASE("misclassification frequency is nonincreasing in n") {
  const std::size_t reps = 200;
  for (const auto& model : builtin_models()) {
    for (ParamIndex truth = 0; truth < model.space().size(); ++truth) {
      std::vector<double> freq;
      for (std::size_t n : {10u, 100u, 1000u}) {
        int errors = 0;
        for (std::size_t rep = 0; rep < reps; ++rep) {
          const auto data = model.sample(truth, 77 + n, rep, n);
          errors += m_estimate(model, data).chosen_index != truth;
        }
        freq.push_back(errors / static_cast<double>(reps));
      }
      for (std::size_t k = 1; k < freq.size(); ++k) {
        const double se = std::sqrt(std::max(freq[k - 1] * (1 - freq[k - 1]), 1e-12) / reps);
        CAPTURE(model.family_name());
        CAPTURE(truth);
        CHECK(freq[k] <= freq[k - 1] + 2.0 * se);
      }
    }
  }
}

TEST_CASE("estimator is invariant to data order and per-observation offsets") {
  const auto model = builtin_models()[0];
  auto data = model.sample(1, 5, 0, 257);
  const auto base = m_estimate(model, data);
  std::mt19937 shuffler(3);
  for (int t = 0; t < 20; ++t) {
    std::shuffle(data.begin(), data.end(), shuffler);
    const auto r = m_estimate(model, data);
    CHECK(r.chosen_index == base.chosen_index);
    CHECK(r.objective_values == base.objective_values);
  }

  const Model shifted(model.space(), Empirical{[&](ParamIndex i, double y) {
                                         return model.log_density(i, y) + 3.0 * std::sin(y) + y * y;
                                       },
                                       {}});
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto d = model.sample(s % 3, 11, s, 15);
    CHECK(m_estimate(shifted, d).chosen_index == m_estimate(model, d).chosen_index);
  }
}

TEST_CASE("bayes_estimate") {
  const auto models = builtin_models();
  SUBCASE("uniform prior reproduces the MLE") {
    for (const auto& model : models) {
      const auto uniform = Prior::uniform(model.space().size());
      for (std::uint64_t s = 0; s < 200; ++s) {
        const auto data = model.sample(s % model.space().size(), 99, s, 1 + s % 7);
        CHECK(bayes_estimate(model, data, uniform).chosen_index == m_estimate(model, data).chosen_index);
      }
    }
  }
  SUBCASE("a strong prior overrides one weak observation") {
    const Model m(ParameterSpace::from_scalars({-1.0, 1.0}), GaussianKnownVar{1.0});
    const std::vector<double> data{0.1};
    CHECK(m_estimate(m, data).chosen_index == 1);
    const double eps = 1e-9;
    const auto r = bayes_estimate(m, data, Prior({1.0 - eps, eps}));
    // Decision vector: ln f(0.1; theta) + ln pi(theta); the gap 0.2 is swamped by ln(1e-9).
    CHECK(r.chosen_index == 0);
    REQUIRE(r.posterior_log_weights.has_value());
    const auto& lp = *r.posterior_log_weights;
    CHECK(std::exp(lp[0]) + std::exp(lp[1]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lp[1] - lp[0] == doctest::Approx(0.2 + std::log(eps) - std::log1p(-eps)).epsilon(1e-12));
  }
  SUBCASE("zero prior weight is rejected") { CHECK_THROWS_AS(Prior({1.0, 0.0}), ValidationError); }
  SUBCASE("prior length must match") {
    const std::vector<double> data{0.1};
    CHECK_THROWS_AS(bayes_estimate(example6(), data, Prior::uniform(3)), ValidationError);
  }
}

TEST_CASE("shifted_estimate") {
  const auto model = example6();
  SUBCASE("k = 0 is the MLE") {
    for (std::uint64_t s = 0; s < 1000; ++s) {
      const auto data = model.sample(s % 2, 31, s, 1 + s % 9);
      CHECK(shifted_estimate(model, data, 0.0).chosen_index == m_estimate(model, data).chosen_index);
    }
  }
  SUBCASE("requires a two-point space") {
    const Model three(ParameterSpace::from_scalars({0.0, 1.0, 2.0}), GaussianKnownVar{1.0});
    CHECK_THROWS_AS(shifted_estimate(three, std::vector<double>{0.0}, 1.0), ValidationError);
  }
  SUBCASE("error frequencies for k = 1, n = 4") {
    // Closed forms: Phi(-(k+2)/2 * sqrt(n)) = Phi(-3) under theta_0 and
    // Phi((k-2)/2 * sqrt(n)) = Phi(-1) under theta_1.
    const std::size_t reps = 200000;
    const double expected[2] = {normal_cdf(-3.0), normal_cdf(-1.0)};
    for (ParamIndex truth = 0; truth < 2; ++truth) {
      std::size_t errors = 0;
      for (std::size_t r = 0; r < reps; ++r) {
        const auto data = model.sample(truth, 123, r, 4);
        errors += shifted_estimate(model, data, 1.0).chosen_index != truth;
      }
      const double p = expected[truth];
      CHECK(std::abs(errors / static_cast<double>(reps) - p) <= 4.0 * std::sqrt(p * (1 - p) / reps));
    }
  }
}
