#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dpe {

using ParamIndex = std::size_t;

// One observation. Real for gaussian, nonnegative integer for poisson, 0/1
// for bernoulli_power (1 = success), symbol index for categorical.
using Observation = double;

struct ParamPoint {
  std::string label;
  std::vector<double> value;  // numeric embedding; may be empty
};

// Ordered finite parameter set theta_0..theta_J. Indices are stable.
class ParameterSpace {
 public:
  explicit ParameterSpace(std::vector<ParamPoint> points);

  // Points labelled by their values, e.g. {-1, 1} -> labels "-1", "1".
  static ParameterSpace from_scalars(const std::vector<double>& values);
  // Label-only points without a numeric embedding.
  static ParameterSpace from_labels(const std::vector<std::string>& labels);

  std::size_t size() const noexcept { return points_.size(); }
  // J, the number of alternatives to any one point.
  std::size_t alternatives() const noexcept { return points_.size() - 1; }
  const ParamPoint& operator[](ParamIndex i) const;
  const std::vector<ParamPoint>& points() const noexcept { return points_; }
  std::optional<ParamIndex> index_of(const std::string& label) const;
  bool has_embedding() const noexcept;
  // value[0]; throws when the point carries no embedding.
  double scalar(ParamIndex i) const;
  // Euclidean distance between embeddings.
  double distance(ParamIndex a, ParamIndex b) const;

 private:
  std::vector<ParamPoint> points_;
};

struct GaussianKnownVar {
  double sigma = 1.0;
};
struct Poisson {};
// Single Bernoulli trial with success probability k^theta.
struct BernoulliPower {
  double k = 0.5;
};
struct Categorical {
  std::vector<std::string> support;
  std::vector<std::vector<double>> pmf;  // one row per parameter point
};
// Externally supplied log-density, optionally with a sampler.
struct Empirical {
  std::function<double(ParamIndex, Observation)> log_density;
  std::function<Observation(ParamIndex, std::uint64_t seed, std::uint64_t stream, std::size_t draw)> sampler;
};

using Family = std::variant<GaussianKnownVar, Poisson, BernoulliPower, Categorical, Empirical>;

struct Capabilities {
  bool can_sample = false;
  bool can_enumerate = false;
  bool has_analytic_lmgf = false;
};

// Finite shared support with its probability table.
struct SupportTable {
  std::vector<std::string> symbols;
  std::vector<std::vector<double>> pmf;  // (J+1) x |support|
};

class Model {
 public:
  Model(ParameterSpace space, Family family);

  const ParameterSpace& space() const noexcept { return space_; }
  const Family& family() const noexcept { return family_; }
  std::string family_name() const;
  Capabilities capabilities() const noexcept;
  // Finite-support families whose laws have a lattice-valued LLR.
  bool is_lattice() const noexcept;

  double log_density(ParamIndex i, Observation y) const;
  // count i.i.d. draws under theta_i; a pure function of (seed, stream, i, count).
  std::vector<Observation> sample(ParamIndex i, std::uint64_t seed, std::uint64_t stream,
                                  std::size_t count) const;
  SupportTable enumerate_support() const;

  // Validates y against the family's observation domain.
  void check_observation(Observation y) const;

 private:
  void check_index(ParamIndex i) const;

  ParameterSpace space_;
  Family family_;
};

class Prior {
 public:
  explicit Prior(std::vector<double> weights);
  static Prior uniform(std::size_t size);

  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](ParamIndex i) const { return weights_.at(i); }
  double min_weight() const;

 private:
  std::vector<double> weights_;
};

}  // namespace dpe
