#include "dpe/verify.hpp"

#include <algorithm>
#include <cmath>

#include "dpe/error.hpp"
#include "dpe/numeric.hpp"
#include "dpe/parallel.hpp"

namespace dpe {

namespace {

constexpr std::size_t kChunk = 4096;
constexpr std::size_t kSimBlock = 512;
constexpr double kWilson95 = 1.959963984540054;

// Advances to the next count vector; false after the last one.
bool next_counts(std::vector<std::size_t>& c) {
  const std::size_t last = c.size() - 1;
  std::size_t i = last;
  while (i > 0) {
    --i;
    if (c[i] > 0) {
      --c[i];
      const std::size_t tail = c[last];
      c[last] = 0;
      c[i + 1] = tail + 1;
      return true;
    }
  }
  return false;
}

// Fixed-shape pairwise reduction, so the result does not depend on scheduling.
std::vector<double> tree_reduce(std::vector<std::vector<double>> parts) {
  while (parts.size() > 1) {
    std::vector<std::vector<double>> next;
    for (std::size_t k = 0; k + 1 < parts.size(); k += 2) {
      auto merged = parts[k];
      for (std::size_t j = 0; j < merged.size(); ++j) merged[j] = log_add(merged[j], parts[k + 1][j]);
      next.push_back(std::move(merged));
    }
    if (parts.size() % 2 == 1) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return parts.front();
}

void check_truth(const Model& model, ParamIndex truth) {
  if (truth >= model.space().size()) throw ValidationError("truth index out of range");
}

}  // namespace

double count_vector_total(std::size_t symbols, std::size_t n) {
  if (symbols == 0) return 0.0;
  const double k = static_cast<double>(symbols) - 1.0;
  const double m = static_cast<double>(n);
  return std::round(std::exp(std::lgamma(m + k + 1.0) - std::lgamma(m + 1.0) - std::lgamma(k + 1.0)));
}

ExactDistribution enumerate_exact(const Model& model, const EstimatorSpec& spec, ParamIndex truth, std::size_t n,
                                  unsigned threads) {
  if (!model.capabilities().can_enumerate)
    throw CapabilityError(model.family_name() + " family cannot be enumerated");
  check_truth(model, truth);
  if (n < 1) throw ValidationError("sample size must be at least 1");
  const SupportTable table = model.enumerate_support();
  const std::size_t symbols = table.symbols.size();
  const double total = count_vector_total(symbols, n);
  if (total > kEnumerationGuard)
    throw ValidationError("enumeration needs " + std::to_string(total) + " count vectors, above the guard of 1e8");

  std::vector<double> log_p(symbols);
  for (std::size_t s = 0; s < symbols; ++s) log_p[s] = std::log(table.pmf[truth][s]);
  const double log_nfact = std::lgamma(static_cast<double>(n) + 1.0);

  // Starting count vector of every chunk.
  std::vector<std::vector<std::size_t>> starts;
  std::vector<std::size_t> c(symbols, 0);
  c[0] = n;
  std::size_t seen = 0;
  do {
    if (seen % kChunk == 0) starts.push_back(c);
    ++seen;
  } while (next_counts(c));

  const std::size_t points = model.space().size();
  std::vector<std::vector<double>> parts(starts.size(), std::vector<double>(points, kNegInf));
  parallel_for(starts.size(), resolve_threads(threads), [&](std::size_t chunk) {
    auto counts = starts[chunk];
    auto& acc = parts[chunk];
    std::vector<Observation> data(n);
    for (std::size_t step = 0; step < kChunk; ++step) {
      double lp = log_nfact;
      std::size_t pos = 0;
      for (std::size_t s = 0; s < symbols; ++s) {
        if (counts[s] == 0) continue;
        lp += static_cast<double>(counts[s]) * log_p[s] - std::lgamma(static_cast<double>(counts[s]) + 1.0);
        std::fill_n(data.begin() + static_cast<std::ptrdiff_t>(pos), counts[s], static_cast<Observation>(s));
        pos += counts[s];
      }
      if (lp > kNegInf) {
        const auto objective = mean_log_likelihood(model, data);
        const auto chosen = decide(objective, n, spec).chosen_index;
        acc[chosen] = log_add(acc[chosen], lp);
      }
      if (!next_counts(counts)) break;
    }
  });

  ExactDistribution out;
  out.n = n;
  out.truth = truth;
  out.log_prob = tree_reduce(std::move(parts));
  out.estimator = describe(spec);
  out.count_vectors = seen;
  return out;
}

SimulationResult simulate(const Model& model, const EstimatorSpec& spec, ParamIndex truth, std::size_t n,
                          std::size_t replicates, std::uint64_t seed, unsigned threads) {
  if (!model.capabilities().can_sample) throw CapabilityError(model.family_name() + " family cannot be sampled");
  check_truth(model, truth);
  if (n < 1) throw ValidationError("sample size must be at least 1");
  if (replicates < 1) throw ValidationError("need at least one replicate");

  const std::size_t points = model.space().size();
  const std::size_t blocks = (replicates + kSimBlock - 1) / kSimBlock;
  std::vector<std::vector<std::size_t>> block_counts(blocks, std::vector<std::size_t>(points, 0));
  parallel_for(blocks, resolve_threads(threads), [&](std::size_t b) {
    const std::size_t end = std::min(replicates, (b + 1) * kSimBlock);
    for (std::size_t r = b * kSimBlock; r < end; ++r) {
      const auto data = model.sample(truth, seed, r, n);
      ++block_counts[b][estimate(model, data, spec).chosen_index];
    }
  });

  SimulationResult out;
  out.n = n;
  out.truth = truth;
  out.replicates = replicates;
  out.seed = seed;
  out.estimator = describe(spec);
  out.counts.assign(points, 0);
  for (const auto& bc : block_counts)
    for (std::size_t j = 0; j < points; ++j) out.counts[j] += bc[j];
  for (std::size_t j = 0; j < points; ++j) {
    out.p_hat.push_back(static_cast<double>(out.counts[j]) / static_cast<double>(replicates));
    out.wilson95.push_back(wilson_interval(out.counts[j], replicates, kWilson95));
  }
  return out;
}

GaussianErrors gaussian_closed_form(double alpha, double sigma, double n, double k) {
  if (!(alpha > 0.0) || !(sigma > 0.0)) throw ValidationError("alpha and sigma must be positive");
  if (!(n >= 1.0)) throw ValidationError("sample size must be at least 1");
  const double scale = std::sqrt(n) / (2.0 * alpha * sigma);
  const double s2 = sigma * sigma;
  const double a2 = 2.0 * alpha * alpha;
  GaussianErrors out;
  out.log_err0 = log_normal_cdf(-(k * s2 + a2) * scale);
  out.log_err1 = log_normal_cdf((k * s2 - a2) * scale);
  out.err0 = std::exp(out.log_err0);
  out.err1 = std::exp(out.log_err1);
  return out;
}

Eigen::MatrixXd exact_law_matrix(const Model& model, const EstimatorSpec& spec, std::size_t n, unsigned threads) {
  const auto size = model.space().size();
  Eigen::MatrixXd out(size, size);
  for (ParamIndex t = 0; t < size; ++t) {
    const auto d = enumerate_exact(model, spec, t, n, threads);
    for (ParamIndex j = 0; j < size; ++j) out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = d.log_prob[j];
  }
  return out;
}

Eigen::MatrixXd simulated_law_matrix(const std::vector<SimulationResult>& runs) {
  const auto size = runs.size();
  Eigen::MatrixXd out(size, size);
  for (std::size_t t = 0; t < size; ++t) {
    if (runs[t].truth != t || runs[t].p_hat.size() != size)
      throw ValidationError("simulations must cover every truth point in order");
    for (std::size_t j = 0; j < size; ++j)
      out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = std::log(runs[t].p_hat[j]);
  }
  return out;
}

Eigen::MatrixXd gaussian_law_matrix(double alpha, double sigma, double n, double k) {
  const auto e = gaussian_closed_form(alpha, sigma, n, k);
  Eigen::MatrixXd out(2, 2);
  out << log1m_exp(e.log_err0), e.log_err0, e.log_err1, log1m_exp(e.log_err1);
  return out;
}

RiskTable risk_table(const Eigen::MatrixXd& log_law, const ParameterSpace& space,
                     const std::optional<Eigen::MatrixXd>& weights, const std::optional<Prior>& prior) {
  const auto size = static_cast<Eigen::Index>(space.size());
  if (log_law.rows() != size || log_law.cols() != size) throw ValidationError("law matrix does not match the space");
  if (weights) {
    if (weights->rows() != size || weights->cols() != size) throw ValidationError("weight matrix has wrong shape");
    for (Eigen::Index t = 0; t < size; ++t)
      for (Eigen::Index j = 0; j < size; ++j)
        if (t != j && !((*weights)(t, j) > 0.0)) throw ValidationError("risk weights must be positive");
  }
  if (prior && prior->size() != space.size()) throw ValidationError("prior size does not match the space");
  const bool embedded = space.has_embedding();

  RiskTable out;
  std::vector<double> log_r1s;
  for (Eigen::Index t = 0; t < size; ++t) {
    RiskRow row;
    std::vector<double> off, sq;
    for (Eigen::Index j = 0; j < size; ++j) {
      if (j == t) continue;
      const double lp = log_law(t, j);
      off.push_back(lp);
      row.r3 += (weights ? (*weights)(t, j) : 1.0) * std::exp(lp);
      if (embedded)
        sq.push_back(lp + 2.0 * std::log(space.distance(static_cast<ParamIndex>(j), static_cast<ParamIndex>(t))));
    }
    row.log_r1 = std::min(0.0, log_sum_exp(off));
    row.r1 = std::exp(row.log_r1);
    if (embedded) {
      row.log_r2 = log_sum_exp(sq);
      row.r2 = std::exp(*row.log_r2);
    }
    log_r1s.push_back(row.log_r1);
    out.rows.push_back(row);
  }

  const Prior pi = prior ? *prior : Prior::uniform(space.size());
  std::vector<double> weighted, uniform;
  for (std::size_t t = 0; t < log_r1s.size(); ++t) {
    weighted.push_back(std::log(pi[t]) + log_r1s[t]);
    uniform.push_back(log_r1s[t] - std::log(static_cast<double>(log_r1s.size())));
  }
  out.log_bayes_risk = log_sum_exp(weighted);
  out.bayes_risk = std::exp(out.log_bayes_risk);
  out.error_probability = std::exp(log_sum_exp(uniform));
  out.log_max_r1 = *std::max_element(log_r1s.begin(), log_r1s.end());
  out.max_r1 = std::exp(out.log_max_r1);
  return out;
}

double mean_estimate(const std::vector<double>& log_prob, const ParameterSpace& space) {
  if (log_prob.size() != space.size()) throw ValidationError("law does not match the space");
  double m = 0.0;
  for (ParamIndex j = 0; j < space.size(); ++j) m += std::exp(log_prob[j]) * space.scalar(j);
  return m;
}

bool within_wilson(std::size_t successes, std::size_t trials, double p, double radius) {
  const auto [lo, hi] = wilson_interval(successes, trials, radius);
  return p >= lo && p <= hi;
}

bool within_binomial_se(double p_hat, double p, std::size_t trials, double radius) {
  return std::abs(p_hat - p) <= radius * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

std::uint64_t fresh_seed(std::uint64_t seed) { return seed + 0x9E3779B97F4A7C15ULL; }

CheckOutcome check_with_rerun(std::uint64_t seed, const std::function<bool(std::uint64_t)>& check) {
  if (check(seed)) return {true, seed, false};
  const auto next = fresh_seed(seed);
  return {check(next), next, true};
}

}  // namespace dpe
