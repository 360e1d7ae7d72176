#include "cli.hpp"

#include <CLI11.hpp>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "dpe/asymptotics.hpp"
#include "dpe/bounds.hpp"
#include "dpe/error.hpp"
#include "dpe/estimator.hpp"
#include "dpe/llr.hpp"
#include "dpe/numeric.hpp"
#include "dpe/rates.hpp"
#include "dpe/spec_io.hpp"
#include "dpe/verify.hpp"

#ifndef DPE_VERSION
#define DPE_VERSION "0.0.0"
#endif

namespace dpe::cli {

namespace {

using nlohmann::json;

constexpr const char* kTool = "discrete-param";

struct Config {
  std::string command;
  std::string model_path;
  std::string data_path;
  std::string curves_path;
  std::string out_path;
  std::string csv_path;
  std::string lmgf_path;
  std::string example_name = "gaussian";
  ParamIndex truth = 0;
  std::vector<ParamIndex> alts;
  std::vector<ParamIndex> truths;
  std::string n_list;
  std::size_t reps = 100000;
  std::uint64_t seed = 0x5EED;
  std::string estimator;
  std::optional<double> k;
  std::string prior_list;
  std::string backend = "analytic";
  std::size_t sample_size = 100000;
  unsigned threads = 0;
  double tol = 0.02;
  double min_n = 25;
  std::string method;
  double alpha = 1.0;
  double sigma = 1.0;
  double lmgf_max = 2.0;
  std::size_t lmgf_points = 41;
};

json config_json(const Config& c) {
  json j = {{"command", c.command},   {"model", c.model_path}, {"data", c.data_path},
            {"curves", c.curves_path}, {"truth", c.truth},     {"alts", c.alts},
            {"truths", c.truths},     {"n", c.n_list},         {"reps", c.reps},
            {"seed", c.seed},         {"estimator", c.estimator}, {"prior", c.prior_list},
            {"backend", c.backend},   {"sample_size", c.sample_size}, {"tol", c.tol},
            {"min_n", c.min_n},       {"method", c.method},    {"alpha", c.alpha},
            {"sigma", c.sigma},       {"lmgf_max", c.lmgf_max}, {"lmgf_points", c.lmgf_points}};
  j["k"] = c.k ? json(*c.k) : json(nullptr);
  if (c.command == "example") j["example"] = c.example_name;
  return j;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

// FNV-1a
std::uint64_t hash_text(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ValidationError("cannot read " + what + " entry \"" + item + "\"");
    out.push_back(v);
  }
  return out;
}

// "1,2,5" or "20:200:10" (inclusive) or mixtures.
std::vector<std::size_t> parse_n_grid(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  auto to_n = [](const std::string& s) {
    std::size_t used = 0;
    long long v = -1;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || v < 1) throw ValidationError("sample sizes must be positive integers, got \"" + s + "\"");
    return static_cast<std::size_t>(v);
  };
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (const auto p = item.find(':'); p != std::string::npos) {
      const auto q = item.find(':', p + 1);
      const std::size_t lo = to_n(item.substr(0, p));
      const std::size_t hi = to_n(item.substr(p + 1, q == std::string::npos ? std::string::npos : q - p - 1));
      const std::size_t step = q == std::string::npos ? 1 : to_n(item.substr(q + 1));
      for (std::size_t n = lo; n <= hi; n += step) out.push_back(n);
    } else {
      out.push_back(to_n(item));
    }
  }
  if (out.empty()) throw ValidationError("empty sample-size grid");
  return out;
}

class Runner {
 public:
  Runner(Config cfg, std::ostream& out, std::ostream& err) : c_(std::move(cfg)), out_(out), err_(err) {}

  void execute() {
    if (!c_.model_path.empty()) spec_ = load_model_spec(c_.model_path);
    json cfg = config_json(c_);
    if (spec_) cfg["model_spec"] = model_spec_to_json(spec_->model, spec_->prior);
    meta_ = {{"tool", kTool}, {"version", DPE_VERSION}, {"config_hash", hex64(hash_text(cfg.dump()))},
             {"seed", c_.seed}, {"config", cfg}};

    if (c_.command == "estimate") return estimate_cmd();
    if (c_.command == "analyze") return analyze_cmd();
    if (c_.command == "bounds") return bounds_cmd();
    if (c_.command == "approx") return approx_cmd();
    if (c_.command == "simulate") return simulate_cmd();
    if (c_.command == "enumerate") return enumerate_cmd();
    if (c_.command == "report") return report_cmd();
    if (c_.command == "verdict") return verdict_cmd();
    if (c_.command == "example") return example_cmd();
    throw ValidationError("unknown command " + c_.command);
  }

 private:
  const Model& model() const { return spec_->model; }

  std::string label(ParamIndex i) const { return model().space()[i].label; }

  void check_truth(ParamIndex t) const {
    if (t >= model().space().size()) throw ValidationError("truth index " + std::to_string(t) + " out of range");
  }

  void warn(const std::string& kind, const std::string& message) const {
    err_ << json{{"warning", kind}, {"message", message}}.dump() << "\n";
  }

  std::ostream& sink(const std::string& path, std::ofstream& file) const {
    if (path.empty() || path == "-") return out_;
    file.open(path, std::ios::binary);
    if (!file) throw ValidationError("cannot write " + path);
    return file;
  }

  void emit_json(json body) const {
    body["meta"] = meta_;
    std::ofstream file;
    sink(c_.out_path, file) << body.dump(2) << "\n";
  }

  std::string csv_preamble() const {
    return "# " + std::string(kTool) + " " + DPE_VERSION + " config_hash=" + meta_["config_hash"].get<std::string>() +
           " seed=" + std::to_string(c_.seed) + "\n";
  }

  EstimatorSpec estimator() const {
    std::string kind = c_.estimator;
    if (kind.empty()) kind = c_.k ? "shifted" : (!c_.prior_list.empty() ? "bayes" : "mle");
    if (kind == "mle") return MleSpec{};
    if (kind == "shifted") return ShiftedSpec{c_.k.value_or(0.0)};
    if (!c_.prior_list.empty()) {
      auto w = parse_doubles(c_.prior_list, "prior");
      if (w.size() != model().space().size()) throw ValidationError("prior length must match the number of points");
      return BayesSpec{Prior(std::move(w))};
    }
    if (spec_ && spec_->prior) return BayesSpec{*spec_->prior};
    return BayesSpec{Prior::uniform(model().space().size())};
  }

  std::vector<ParamIndex> alternatives(ParamIndex truth) const {
    std::vector<ParamIndex> out;
    if (!c_.alts.empty()) {
      for (ParamIndex a : c_.alts) {
        if (a >= model().space().size()) throw ValidationError("alternative index out of range");
        if (a != truth) out.push_back(a);
      }
      return out;
    }
    for (ParamIndex a = 0; a < model().space().size(); ++a)
      if (a != truth) out.push_back(a);
    return out;
  }

  LlrOptions llr_options() const {
    LlrOptions o;
    if (c_.backend == "empirical") o.backend = Backend::empirical;
    o.sample_size = c_.sample_size;
    o.seed = c_.seed;
    return o;
  }

  void lattice_warning() const {
    if (model().is_lattice())
      warn("lattice", model().family_name() +
                          " observations give a lattice-valued log-likelihood ratio; sharp asymptotic prefactors may "
                          "oscillate");
  }

  // ---------------------------------------------------------------------------

  void estimate_cmd() {
    const auto data = load_data(c_.data_path, model());
    const auto spec = estimator();
    const auto res = estimate(model(), data, spec);
    json body = {{"estimator", describe(spec)},
                 {"n", data.size()},
                 {"chosen_index", res.chosen_index},
                 {"chosen_label", label(res.chosen_index)},
                 {"objective_values", res.objective_values},
                 {"tie_occurred", res.tie_occurred}};
    if (res.posterior_log_weights) body["posterior_log_weights"] = *res.posterior_log_weights;
    if (res.tie_occurred) warn("tie", "several points maximize the objective; the smallest index was chosen");
    emit_json(body);
  }

  static json rate_json(const AlternativeRate& r) {
    return {{"alternative", r.alternative},
            {"rate", r.rate},
            {"dual_certificate", std::vector<double>(r.dual_certificate.begin(), r.dual_certificate.end())},
            {"dominating_point", std::vector<double>(r.dominating_point.begin(), r.dominating_point.end())},
            {"primal_value", r.primal_value},
            {"duality_gap", r.duality_gap},
            {"misidentified", r.misidentified}};
  }

  void analyze_cmd() {
    check_truth(c_.truth);
    const auto opts = llr_options();
    const auto report = rate_report(model(), c_.truth, opts, c_.threads);
    json alts = json::array();
    for (const auto& r : report.per_alternative) {
      auto j = rate_json(r);
      j["label"] = label(r.alternative);
      alts.push_back(j);
      if (r.misidentified)
        warn("misidentified", "alternative " + label(r.alternative) + " is not separated from the truth: rate 0");
    }
    json body = {{"truth", c_.truth},
                 {"truth_label", label(c_.truth)},
                 {"backend", c_.backend},
                 {"total_rate", report.total_rate},
                 {"argmin", report.argmin},
                 {"max_duality_gap", report.max_duality_gap},
                 {"per_alternative", alts}};

    if (!c_.csv_path.empty()) {
      const auto b = bounds_report(model(), c_.truth, c_.threads);
      std::ofstream file;
      auto& os = sink(c_.csv_path, file);
      os << csv_preamble() << "a,b,kl,chernoff\n";
      for (Eigen::Index a = 0; a < b.kl.rows(); ++a)
        for (Eigen::Index bb = 0; bb < b.kl.cols(); ++bb)
          os << a << "," << bb << "," << fmt(b.kl(a, bb)) << "," << fmt(b.chernoff(a, bb)) << "\n";
    }
    if (!c_.lmgf_path.empty()) dump_lmgf(opts);
    emit_json(body);
  }

  void dump_lmgf(const LlrOptions& opts) const {
    const auto alts = alternatives(c_.truth);
    if (alts.empty()) throw ValidationError("no alternative to dump");
    const LlrSystem sys(model(), c_.truth, alts.front(), opts);
    if (c_.lmgf_points < 2) throw ValidationError("lmgf grid needs at least 2 points");
    std::ofstream file;
    auto& os = sink(c_.lmgf_path, file);
    os << csv_preamble() << "t";
    for (auto j : sys.components()) os << ",lambda_" << j;
    os << ",Lambda";
    for (auto j : sys.components()) os << ",grad_" << j;
    os << "\n";
    const auto dim = static_cast<Eigen::Index>(sys.dim());
    for (std::size_t k = 0; k < c_.lmgf_points; ++k) {
      const double t = c_.lmgf_max * static_cast<double>(k) / static_cast<double>(c_.lmgf_points - 1);
      const Eigen::VectorXd l = Eigen::VectorXd::Constant(dim, t);
      const double v = sys.lmgf(l);
      os << fmt(t);
      for (Eigen::Index j = 0; j < dim; ++j) os << "," << fmt(l(j));
      os << "," << fmt(v);
      const Eigen::VectorXd g = std::isfinite(v) ? sys.lmgf_grad(l) : Eigen::VectorXd::Constant(dim, kInf);
      for (Eigen::Index j = 0; j < dim; ++j) os << "," << fmt(g(j));
      os << "\n";
    }
  }

  void bounds_cmd() {
    check_truth(c_.truth);
    const auto b = bounds_report(model(), c_.truth, c_.threads);
    auto mat = [](const Eigen::MatrixXd& m) {
      json rows = json::array();
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index k = 0; k < m.cols(); ++k) row[static_cast<std::size_t>(k)] = m(r, k);
        rows.push_back(row);
      }
      return rows;
    };
    emit_json({{"truth", b.truth},
               {"cr_rate_bound", b.cr_rate_bound},
               {"minimax_rate_bound", b.minimax_rate_bound},
               {"inaccuracy_cap", b.inaccuracy_cap},
               {"cr_argmax", b.cr_argmax},
               {"cr_by_truth", b.cr_by_truth},
               {"kl", mat(b.kl)},
               {"chernoff", mat(b.chernoff)}});
  }

  // ln P_truth(MLE = alt) by enumeration, when the guard allows it.
  std::optional<double> exact_enum(ParamIndex truth, ParamIndex alt, std::size_t n, const EstimatorSpec& spec) const {
    if (!model().capabilities().can_enumerate) return std::nullopt;
    if (count_vector_total(model().enumerate_support().symbols.size(), n) > kEnumerationGuard) return std::nullopt;
    return enumerate_exact(model(), spec, truth, n, c_.threads).log_prob[alt];
  }

  struct CurveRows {
    std::vector<double> crude;
    std::optional<std::vector<double>> j1, sp;
  };

  CurveRows curve(ParamIndex truth, ParamIndex alt, const std::vector<double>& ns) const {
    const LlrSystem sys(model(), truth, alt);
    if (sys.dim() <= 3) {
      const auto ac = approx_curve(sys, ns, c_.threads);
      return {ac.crude, ac.exact_j1, ac.saddlepoint};
    }
    CurveRows rows;
    const double rate = alternative_rate(sys).rate;
    for (double n : ns) rows.crude.push_back(crude_ld(rate, n));
    warn("saddlepoint", "saddlepoint approximation is limited to 3 alternatives; column left empty");
    return rows;
  }

  void approx_cmd() {
    check_truth(c_.truth);
    const auto grid = parse_n_grid(c_.n_list);
    const std::vector<double> ns(grid.begin(), grid.end());
    const auto alts = alternatives(c_.truth);
    if (alts.size() != 1) throw ValidationError("approx needs exactly one --alt");
    const ParamIndex alt = alts.front();
    lattice_warning();
    const auto rows = curve(c_.truth, alt, ns);
    std::ofstream file;
    auto& os = sink(c_.out_path, file);
    os << csv_preamble() << "n,crude,exact_j1,saddlepoint,exact_enum\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
      os << grid[k] << "," << fmt(rows.crude[k]) << ",";
      if (rows.j1) os << fmt((*rows.j1)[k]);
      os << ",";
      if (rows.sp) os << fmt((*rows.sp)[k]);
      os << ",";
      if (const auto e = exact_enum(c_.truth, alt, grid[k], MleSpec{})) os << fmt(*e);
      os << "\n";
    }
  }

  static json interval_json(const std::pair<double, double>& iv) { return json::array({iv.first, iv.second}); }

  json simulation_json(const SimulationResult& s) const {
    json iv = json::array();
    for (const auto& w : s.wilson95) iv.push_back(interval_json(w));
    return {{"estimator", s.estimator}, {"truth", s.truth},   {"n", s.n},         {"replicates", s.replicates},
            {"seed", s.seed},           {"counts", s.counts}, {"p_hat", s.p_hat}, {"wilson95", iv}};
  }

  void simulate_cmd() {
    check_truth(c_.truth);
    const auto grid = parse_n_grid(c_.n_list);
    const auto spec = estimator();
    json runs = json::array();
    for (std::size_t n : grid) runs.push_back(simulation_json(simulate(model(), spec, c_.truth, n, c_.reps, c_.seed, c_.threads)));
    emit_json({{"simulations", runs}});
  }

  void enumerate_cmd() {
    check_truth(c_.truth);
    const auto grid = parse_n_grid(c_.n_list);
    const auto spec = estimator();
    json runs = json::array();
    for (std::size_t n : grid) {
      const auto d = enumerate_exact(model(), spec, c_.truth, n, c_.threads);
      double total = 0;
      for (double lp : d.log_prob) total += std::exp(lp);
      runs.push_back({{"estimator", d.estimator},
                      {"truth", d.truth},
                      {"n", d.n},
                      {"log_prob", d.log_prob},
                      {"count_vectors", d.count_vectors},
                      {"total_probability", total}});
    }
    emit_json({{"distributions", runs}});
  }

  // Error probabilities of the two-point Gaussian threshold rules.
  std::optional<GaussianErrors> closed_form(const EstimatorSpec& spec, double n) const {
    const auto* g = std::get_if<GaussianKnownVar>(&model().family());
    if (!g || model().space().size() != 2 || !model().space().has_embedding()) return std::nullopt;
    const double alpha = 0.5 * model().space().distance(0, 1);
    double k = 0.0;
    if (const auto* s = std::get_if<ShiftedSpec>(&spec)) k = s->k;
    if (const auto* b = std::get_if<BayesSpec>(&spec)) k = std::log(b->prior[0] / b->prior[1]) / n;
    return gaussian_closed_form(alpha, g->sigma, n, k);
  }

  void report_cmd() {
    const auto grid = parse_n_grid(c_.n_list);
    const std::vector<double> ns(grid.begin(), grid.end());
    const auto spec = estimator();
    std::vector<ParamIndex> truths = c_.truths;
    if (truths.empty())
      for (ParamIndex t = 0; t < model().space().size(); ++t) truths.push_back(t);
    lattice_warning();

    std::ofstream file;
    auto& os = sink(c_.out_path, file);
    os << csv_preamble() << "# estimator=" << describe(spec) << "\n" << "n,method,truth,alt,log_prob\n";
    auto row = [&](std::size_t n, const char* method, ParamIndex t, ParamIndex a, double v) {
      os << n << "," << method << "," << t << "," << a << "," << fmt(v) << "\n";
    };
    for (ParamIndex t : truths) {
      check_truth(t);
      for (ParamIndex a : alternatives(t)) {
        std::optional<CurveRows> rows;
        try {
          rows = curve(t, a, ns);
        } catch (const ValidationError& e) {
          warn("approximation", "truth " + std::to_string(t) + " alt " + std::to_string(a) + ": " + e.what());
        }
        for (std::size_t k = 0; k < grid.size(); ++k) {
          if (rows) {
            row(grid[k], "crude", t, a, rows->crude[k]);
            if (rows->j1) row(grid[k], "exact_j1", t, a, (*rows->j1)[k]);
            if (rows->sp) row(grid[k], "saddlepoint", t, a, (*rows->sp)[k]);
          }
          if (const auto e = exact_enum(t, a, grid[k], spec)) row(grid[k], "exact_enum", t, a, *e);
          if (const auto cf = closed_form(spec, ns[k])) row(grid[k], "closed_form", t, a, t == 0 ? cf->log_err0 : cf->log_err1);
        }
      }
    }
  }

  void verdict_cmd() {
    check_truth(c_.truth);
    const std::string text = read_file(c_.curves_path);
    // method -> truth -> n -> alt log-probabilities
    std::map<std::string, std::map<ParamIndex, std::map<std::size_t, std::vector<double>>>> curves;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      if (!header) {
        if (line != "n,method,truth,alt,log_prob")
          throw SpecError(c_.curves_path, lineno, 1, "expected header n,method,truth,alt,log_prob");
        header = true;
        continue;
      }
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() != 5) throw SpecError(c_.curves_path, lineno, 1, "expected 5 columns");
      try {
        const auto n = static_cast<std::size_t>(std::stoull(cells[0]));
        const auto t = static_cast<ParamIndex>(std::stoull(cells[2]));
        const auto a = static_cast<ParamIndex>(std::stoull(cells[3]));
        const double lp = std::strtod(cells[4].c_str(), nullptr);
        if (t == a) continue;
        curves[cells[1]][t][n].push_back(lp);
      } catch (const std::exception&) {
        throw SpecError(c_.curves_path, lineno, 1, "cannot read row");
      }
    }
    std::string method = c_.method;
    if (method.empty()) method = curves.count("exact_enum") ? "exact_enum" : "closed_form";
    const auto it = curves.find(method);
    if (it == curves.end()) throw ValidationError("no rows for method " + method);

    const auto size = model().space().size();
    std::vector<double> grid;
    std::vector<std::vector<double>> log_err(size);
    for (ParamIndex t = 0; t < size; ++t) {
      const auto tt = it->second.find(t);
      if (tt == it->second.end()) throw ValidationError("curves lack truth " + std::to_string(t));
      std::vector<double> ns;
      for (const auto& [n, lps] : tt->second) {
        if (static_cast<double>(n) < c_.min_n) continue;
        ns.push_back(static_cast<double>(n));
        log_err[t].push_back(std::min(0.0, log_sum_exp(lps)));
      }
      if (t == 0) grid = ns;
      if (ns != grid) throw ValidationError("truth curves use different sample-size grids");
    }
    const auto b = bounds_report(model(), c_.truth, c_.threads);
    const auto v = efficiency_verdict(grid, log_err, b, c_.tol);
    json per = json::array();
    for (std::size_t t = 0; t < size; ++t) {
      const auto& f = v.per_truth[t];
      per.push_back({{"truth", t},
                     {"slope", f.vanishing ? json("-inf") : json(f.slope)},
                     {"vanishing", f.vanishing},
                     {"cr_rate_bound", b.cr_by_truth[t]},
                     {"attains_cr", static_cast<bool>(v.attains_cr_by_truth[t])}});
    }
    emit_json({{"method", method},
               {"n_grid", grid},
               {"tol", c_.tol},
               {"truth", c_.truth},
               {"per_truth", per},
               {"worst_case_slope", v.worst_case.vanishing ? json("-inf") : json(v.worst_case.slope)},
               {"minimax_rate_bound", b.minimax_rate_bound},
               {"attains_cr", v.attains_cr},
               {"attains_minimax", v.attains_minimax}});
  }

  void example_cmd() {
    const auto grid = parse_n_grid(c_.n_list);
    if (grid.size() != 1) throw ValidationError("example takes a single --n");
    const double n = static_cast<double>(grid.front());
    spec_ = ModelSpec{Model(ParameterSpace::from_scalars({c_.alpha, -c_.alpha}), GaussianKnownVar{c_.sigma}), std::nullopt};
    const EstimatorSpec spec = c_.k ? EstimatorSpec{ShiftedSpec{*c_.k}} : EstimatorSpec{MleSpec{}};
    const auto cf = gaussian_closed_form(c_.alpha, c_.sigma, n, c_.k.value_or(0.0));

    json sims = json::array();
    const double expect[2] = {cf.err0, cf.err1};
    for (ParamIndex t = 0; t < 2; ++t) {
      const auto s = simulate(model(), spec, t, grid.front(), c_.reps, c_.seed, c_.threads);
      const double p_hat = s.p_hat[1 - t];
      const double se = std::sqrt(expect[t] * (1 - expect[t]) / static_cast<double>(s.replicates));
      auto j = simulation_json(s);
      j["error_rate"] = p_hat;
      j["closed_form"] = expect[t];
      j["binomial_se"] = se;
      j["within_4se"] = within_binomial_se(p_hat, expect[t], s.replicates);
      sims.push_back(j);
    }
    const LlrSystem sys(model(), 0, 1);
    const auto rate = alternative_rate(sys);
    const auto two = exact_asymptotic_two_point(sys, n);
    const auto b = bounds_report(model(), 0, c_.threads);
    emit_json({{"example", "gaussian"},
               {"alpha", c_.alpha},
               {"sigma", c_.sigma},
               {"n", grid.front()},
               {"estimator", describe(spec)},
               {"closed_form", {{"err0", cf.err0}, {"err1", cf.err1}, {"log_err0", cf.log_err0}, {"log_err1", cf.log_err1}}},
               {"reference_phi", normal_cdf(-std::sqrt(n) * c_.alpha / c_.sigma)},
               {"simulations", sims},
               {"rate", rate.rate},
               {"dual_certificate", rate.dual_certificate(0)},
               {"duality_gap", rate.duality_gap},
               {"two_point_asymptotic", {{"log_prob", two.log_prob}, {"mu", two.mu}, {"curvature", two.curvature}}},
               {"chapman_robbins_bound", b.cr_rate_bound},
               {"minimax_bound", b.minimax_rate_bound}});
  }

  Config c_;
  std::ostream& out_;
  std::ostream& err_;
  std::optional<ModelSpec> spec_;
  json meta_;
};

void report_error(std::ostream& err, const char* kind, const std::exception& e) {
  json j = {{"error", kind}, {"message", e.what()}};
  if (const auto* s = dynamic_cast<const SpecError*>(&e); s && s->line() > 0) {
    j["line"] = s->line();
    j["column"] = s->column();
  }
  err << j.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config c;
  CLI::App app{"Estimation-error analysis for discrete parameter models", kTool};
  app.set_version_flag("--version", DPE_VERSION);
  app.require_subcommand(1);

  auto model_opt = [&](CLI::App* s) {
    s->add_option("--model", c.model_path, "model JSON file")->required()->check(CLI::ExistingFile);
  };
  auto threads_opt = [&](CLI::App* s) {
    s->add_option("--threads", c.threads, "worker cap (default: DPE_THREADS or all cores)");
  };
  auto out_opt = [&](CLI::App* s) { s->add_option("--out", c.out_path, "output file (default stdout)"); };
  auto estimator_opts = [&](CLI::App* s) {
    s->add_option("--estimator", c.estimator, "mle | bayes | shifted")->check(CLI::IsMember({"mle", "bayes", "shifted"}));
    s->add_option("--prior", c.prior_list, "comma-separated prior weights (bayes)");
    s->add_option("--k", c.k, "threshold shift (shifted)");
  };
  auto truth_opt = [&](CLI::App* s) { s->add_option("--truth", c.truth, "index of the true point"); };

  auto* est = app.add_subcommand("estimate", "apply an estimator to a data file");
  model_opt(est);
  est->add_option("--data", c.data_path, "one observation per line")->required()->check(CLI::ExistingFile);
  estimator_opts(est);
  out_opt(est);

  auto* ana = app.add_subcommand("analyze", "large-deviation rates of every alternative");
  model_opt(ana);
  truth_opt(ana);
  ana->add_option("--backend", c.backend, "analytic | empirical")->check(CLI::IsMember({"analytic", "empirical"}));
  ana->add_option("--sample-size", c.sample_size, "empirical backend sample size");
  ana->add_option("--seed", c.seed, "empirical backend seed");
  ana->add_option("--csv", c.csv_path, "pairwise KL/Chernoff CSV");
  ana->add_option("--dump-lmgf", c.lmgf_path, "CSV of (lambda, Lambda, grad Lambda) along the diagonal");
  ana->add_option("--alt", c.alts, "alternative for --dump-lmgf");
  ana->add_option("--lmgf-max", c.lmgf_max, "largest diagonal coordinate");
  ana->add_option("--lmgf-points", c.lmgf_points, "grid points");
  threads_opt(ana);
  out_opt(ana);

  auto* bnd = app.add_subcommand("bounds", "Chapman-Robbins and minimax exponent bounds");
  model_opt(bnd);
  truth_opt(bnd);
  threads_opt(bnd);
  out_opt(bnd);

  auto* apx = app.add_subcommand("approx", "approximate ln P(estimate = alt) over an n grid (CSV)");
  model_opt(apx);
  truth_opt(apx);
  apx->add_option("--alt", c.alts, "alternative index")->required();
  apx->add_option("--n", c.n_list, "sample sizes, e.g. 1,2,5 or 20:200:10")->required();
  threads_opt(apx);
  out_opt(apx);

  auto* sim = app.add_subcommand("simulate", "seeded Monte Carlo of the estimator");
  model_opt(sim);
  truth_opt(sim);
  sim->add_option("--n", c.n_list, "sample sizes")->required();
  sim->add_option("--reps", c.reps, "replicates");
  sim->add_option("--seed", c.seed, "master seed");
  estimator_opts(sim);
  threads_opt(sim);
  out_opt(sim);

  auto* enu = app.add_subcommand("enumerate", "exact law of the estimator for finite-support models");
  model_opt(enu);
  truth_opt(enu);
  enu->add_option("--n", c.n_list, "sample sizes")->required();
  estimator_opts(enu);
  threads_opt(enu);
  out_opt(enu);

  auto* rep = app.add_subcommand("report", "long CSV of all curves: n,method,truth,alt,log_prob");
  model_opt(rep);
  rep->add_option("--truths", c.truths, "truth indices (default all)");
  rep->add_option("--alt", c.alts, "restrict alternatives");
  rep->add_option("--n", c.n_list, "sample sizes")->required();
  estimator_opts(rep);
  threads_opt(rep);
  out_opt(rep);

  auto* ver = app.add_subcommand("verdict", "efficiency verdicts from a report CSV");
  model_opt(ver);
  truth_opt(ver);
  ver->add_option("--curves", c.curves_path, "CSV written by report")->required()->check(CLI::ExistingFile);
  ver->add_option("--method", c.method, "curve method (default exact_enum, else closed_form)");
  ver->add_option("--tol", c.tol, "slope tolerance in nats");
  ver->add_option("--min-n", c.min_n, "ignore smaller sample sizes");
  threads_opt(ver);
  out_opt(ver);

  auto* exa = app.add_subcommand("example", "built-in worked examples");
  exa->add_option("name", c.example_name, "example name")->check(CLI::IsMember({"gaussian"}));
  exa->add_option("--alpha", c.alpha, "half distance between the two means")->check(CLI::PositiveNumber);
  exa->add_option("--sigma", c.sigma, "noise standard deviation")->check(CLI::PositiveNumber);
  exa->add_option("--n", c.n_list, "sample size")->default_val("4");
  exa->add_option("--reps", c.reps, "replicates")->default_val("200000");
  exa->add_option("--seed", c.seed, "master seed");
  exa->add_option("--k", c.k, "threshold shift");
  threads_opt(exa);
  out_opt(exa);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }
  for (auto* s : app.get_subcommands()) c.command = s->get_name();

  try {
    Runner(c, out, err).execute();
    return 0;
  } catch (const ValidationError& e) {
    report_error(err, "validation", e);
    return 2;
  } catch (const ConvergenceError& e) {
    report_error(err, "convergence", e);
    return 3;
  } catch (const std::exception& e) {
    report_error(err, "internal", e);
    return 1;
  }
}

}  // namespace dpe::cli
