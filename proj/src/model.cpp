#include "dpe/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "dpe/error.hpp"
#include "dpe/rng.hpp"

namespace dpe {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

bool is_nonneg_integer(double y) { return y >= 0.0 && std::isfinite(y) && std::floor(y) == y; }

std::string format_scalar(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

double box_muller(StreamRng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t poisson_draw(StreamRng& rng, double mean) {
  if (mean >= 500.0) {
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(rng);
  }
  // Sequential inversion.
  const double u = rng.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  while (u > cdf && p > 0.0) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

}  // namespace

// ---------------------------------------------------------------------------
// ParameterSpace

ParameterSpace::ParameterSpace(std::vector<ParamPoint> points) : points_(std::move(points)) {
  if (points_.empty()) throw ValidationError("parameter space must contain at least one point");
  std::set<std::string> labels;
  for (const auto& p : points_) {
    if (!labels.insert(p.label).second) throw ValidationError("duplicate parameter label '" + p.label + "'");
  }
  const bool any = std::any_of(points_.begin(), points_.end(), [](const auto& p) { return !p.value.empty(); });
  if (!any) return;
  const std::size_t dim = points_.front().value.size();
  std::set<std::vector<double>> values;
  for (const auto& p : points_) {
    if (p.value.size() != dim || dim == 0)
      throw ValidationError("parameter embeddings must all have the same nonzero dimension");
    for (double v : p.value)
      if (!std::isfinite(v)) throw ValidationError("parameter value for '" + p.label + "' is not finite");
    if (!values.insert(p.value).second)
      throw ValidationError("parameter values must be distinct (duplicate at '" + p.label + "')");
  }
}

ParameterSpace ParameterSpace::from_scalars(const std::vector<double>& values) {
  std::vector<ParamPoint> points;
  points.reserve(values.size());
  for (double v : values) points.push_back({format_scalar(v), {v}});
  return ParameterSpace(std::move(points));
}

ParameterSpace ParameterSpace::from_labels(const std::vector<std::string>& labels) {
  std::vector<ParamPoint> points;
  points.reserve(labels.size());
  for (const auto& l : labels) points.push_back({l, {}});
  return ParameterSpace(std::move(points));
}

const ParamPoint& ParameterSpace::operator[](ParamIndex i) const {
  if (i >= points_.size()) throw ValidationError("parameter index " + std::to_string(i) + " out of range");
  return points_[i];
}

std::optional<ParamIndex> ParameterSpace::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (points_[i].label == label) return i;
  return std::nullopt;
}

bool ParameterSpace::has_embedding() const noexcept { return !points_.front().value.empty(); }

double ParameterSpace::scalar(ParamIndex i) const {
  const auto& p = (*this)[i];
  if (p.value.empty()) throw ValidationError("parameter '" + p.label + "' has no numeric embedding");
  return p.value.front();
}

double ParameterSpace::distance(ParamIndex a, ParamIndex b) const {
  const auto& pa = (*this)[a].value;
  const auto& pb = (*this)[b].value;
  if (pa.empty() || pb.empty()) throw ValidationError("numeric parameter embedding required");
  double s = 0.0;
  for (std::size_t d = 0; d < pa.size(); ++d) s += (pa[d] - pb[d]) * (pa[d] - pb[d]);
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Model

Model::Model(ParameterSpace space, Family family) : space_(std::move(space)), family_(std::move(family)) {
  const auto require_scalar = [&](const char* family, auto&& positive) {
    for (std::size_t i = 0; i < space_.size(); ++i) {
      const auto& p = space_[i];
      if (p.value.size() != 1)
        throw ValidationError(std::string(family) + " family requires a scalar value for '" + p.label + "'");
      if (!positive(p.value[0]))
        throw ValidationError(std::string(family) + " parameter out of range at '" + p.label + "'");
    }
  };
  std::visit(Overloaded{
                 [&](const GaussianKnownVar& g) {
                   if (!(g.sigma > 0.0) || !std::isfinite(g.sigma))
                     throw ValidationError("gaussian_known_var requires sigma > 0");
                   require_scalar("gaussian_known_var", [](double) { return true; });
                 },
                 [&](const Poisson&) { require_scalar("poisson", [](double v) { return v > 0.0; }); },
                 [&](const BernoulliPower& b) {
                   if (!(b.k > 0.0 && b.k < 1.0)) throw ValidationError("bernoulli_power requires k in (0,1)");
                   require_scalar("bernoulli_power", [](double v) { return v > 0.0; });
                 },
                 [&](const Categorical& c) {
                   if (c.support.empty()) throw ValidationError("categorical support is empty");
                   std::set<std::string> seen(c.support.begin(), c.support.end());
                   if (seen.size() != c.support.size()) throw ValidationError("categorical support symbols must be distinct");
                   if (c.pmf.size() != space_.size())
                     throw ValidationError("categorical pmf needs one row per parameter point");
                   for (std::size_t i = 0; i < c.pmf.size(); ++i) {
                     const auto& row = c.pmf[i];
                     if (row.size() != c.support.size())
                       throw ValidationError("categorical pmf row " + std::to_string(i) + " has wrong length");
                     double sum = 0.0;
                     for (double p : row) {
                       if (!(p > 0.0))
                         throw ValidationError("categorical pmf row " + std::to_string(i) +
                                               " has a nonpositive cell; all rows must share one support");
                       sum += p;
                     }
                     if (std::abs(sum - 1.0) > 1e-12)
                       throw ValidationError("categorical pmf row " + std::to_string(i) + " does not sum to 1");
                   }
                 },
                 [&](const Empirical& e) {
                   if (!e.log_density) throw ValidationError("empirical family needs a log-density callback");
                 },
             },
             family_);
}

std::string Model::family_name() const {
  return std::visit(Overloaded{
                        [](const GaussianKnownVar&) { return std::string("gaussian_known_var"); },
                        [](const Poisson&) { return std::string("poisson"); },
                        [](const BernoulliPower&) { return std::string("bernoulli_power"); },
                        [](const Categorical&) { return std::string("categorical"); },
                        [](const Empirical&) { return std::string("empirical"); },
                    },
                    family_);
}

Capabilities Model::capabilities() const noexcept {
  return std::visit(Overloaded{
                        [](const GaussianKnownVar&) { return Capabilities{true, false, true}; },
                        [](const Poisson&) { return Capabilities{true, false, true}; },
                        [](const BernoulliPower&) { return Capabilities{true, true, true}; },
                        [](const Categorical&) { return Capabilities{true, true, true}; },
                        [](const Empirical& e) { return Capabilities{static_cast<bool>(e.sampler), false, false}; },
                    },
                    family_);
}

bool Model::is_lattice() const noexcept {
  return !std::holds_alternative<GaussianKnownVar>(family_) && !std::holds_alternative<Empirical>(family_);
}

void Model::check_index(ParamIndex i) const {
  if (i >= space_.size()) throw ValidationError("parameter index " + std::to_string(i) + " out of range");
}

void Model::check_observation(Observation y) const {
  std::visit(Overloaded{
                 [&](const GaussianKnownVar&) {
                   if (!std::isfinite(y)) throw ValidationError("gaussian observation must be finite");
                 },
                 [&](const Poisson&) {
                   if (!is_nonneg_integer(y)) throw ValidationError("poisson observation must be a nonnegative integer");
                 },
                 [&](const BernoulliPower&) {
                   if (y != 0.0 && y != 1.0) throw ValidationError("bernoulli_power observation must be 0 or 1");
                 },
                 [&](const Categorical& c) {
                   if (!is_nonneg_integer(y) || y >= static_cast<double>(c.support.size()))
                     throw ValidationError("categorical observation outside support");
                 },
                 [](const Empirical&) {},
             },
             family_);
}

double Model::log_density(ParamIndex i, Observation y) const {
  check_index(i);
  check_observation(y);
  return std::visit(Overloaded{
                        [&](const GaussianKnownVar& g) {
                          const double z = (y - space_.scalar(i)) / g.sigma;
                          return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(g.sigma) - 0.5 * z * z;
                        },
                        [&](const Poisson&) {
                          const double theta = space_.scalar(i);
                          return y * std::log(theta) - theta - std::lgamma(y + 1.0);
                        },
                        [&](const BernoulliPower& b) {
                          const double log_p = space_.scalar(i) * std::log(b.k);
                          return y == 1.0 ? log_p : std::log1p(-std::exp(log_p));
                        },
                        [&](const Categorical& c) { return std::log(c.pmf[i][static_cast<std::size_t>(y)]); },
                        [&](const Empirical& e) { return e.log_density(i, y); },
                    },
                    family_);
}

std::vector<Observation> Model::sample(ParamIndex i, std::uint64_t seed, std::uint64_t stream,
                                       std::size_t count) const {
  check_index(i);
  if (!capabilities().can_sample) throw CapabilityError(family_name() + " family cannot sample");
  std::vector<Observation> out;
  out.reserve(count);
  StreamRng rng(seed ^ (0xD1B54A32D192ED03ULL * (i + 1)), stream);
  std::visit(Overloaded{
                 [&](const GaussianKnownVar& g) {
                   const double mean = space_.scalar(i);
                   for (std::size_t d = 0; d < count; ++d) out.push_back(mean + g.sigma * box_muller(rng));
                 },
                 [&](const Poisson&) {
                   const double mean = space_.scalar(i);
                   for (std::size_t d = 0; d < count; ++d) out.push_back(static_cast<double>(poisson_draw(rng, mean)));
                 },
                 [&](const BernoulliPower& b) {
                   const double p = std::pow(b.k, space_.scalar(i));
                   for (std::size_t d = 0; d < count; ++d) out.push_back(rng.uniform() < p ? 1.0 : 0.0);
                 },
                 [&](const Categorical& c) {
                   const auto& row = c.pmf[i];
                   std::vector<double> cdf(row.size());
                   std::partial_sum(row.begin(), row.end(), cdf.begin());
                   for (std::size_t d = 0; d < count; ++d) {
                     const double u = rng.uniform() * cdf.back();
                     const auto it = std::upper_bound(cdf.begin(), cdf.end() - 1, u);
                     out.push_back(static_cast<double>(it - cdf.begin()));
                   }
                 },
                 [&](const Empirical& e) {
                   for (std::size_t d = 0; d < count; ++d) out.push_back(e.sampler(i, seed, stream, d));
                 },
             },
             family_);
  return out;
}

SupportTable Model::enumerate_support() const {
  if (const auto* c = std::get_if<Categorical>(&family_)) return {c->support, c->pmf};
  if (const auto* b = std::get_if<BernoulliPower>(&family_)) {
    SupportTable table{{"failure", "success"}, {}};
    for (std::size_t i = 0; i < space_.size(); ++i) {
      const double p = std::pow(b->k, space_.scalar(i));
      table.pmf.push_back({1.0 - p, p});
    }
    return table;
  }
  throw CapabilityError(family_name() + " family cannot enumerate its support");
}

// ---------------------------------------------------------------------------
// Prior

Prior::Prior(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw ValidationError("prior is empty");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("prior weights must be strictly positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ValidationError("prior weights must sum to 1");
}

Prior Prior::uniform(std::size_t size) {
  if (size == 0) throw ValidationError("prior is empty");
  return Prior(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

double Prior::min_weight() const { return *std::min_element(weights_.begin(), weights_.end()); }

}  // namespace dpe
