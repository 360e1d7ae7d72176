#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <utility>

namespace dpe {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// log(sum_i exp(x_i)), shifted by the max. Empty input or all -inf gives -inf.
double log_sum_exp(std::span<const double> xs);

// log(exp(a) + exp(b))
double log_add(double a, double b);

// log(1 - exp(a)) for a <= 0.
double log1m_exp(double a);

// Standard normal CDF and its logarithm. log_normal_cdf stays accurate far
// into the lower tail where normal_cdf underflows.
double normal_cdf(double x);
double log_normal_cdf(double x);

// Wilson score interval for a binomial proportion, z standard errors wide.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z);

}  // namespace dpe
