#include "dpe/spec_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dpe {

using nlohmann::json;

namespace {

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  const json& field(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path, "missing field \"" + key + "\"");
    return *it;
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }

  std::string string(const json& v, const std::string& path) const {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const json& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], path + "/" + std::to_string(k)));
    return out;
  }

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw SpecError(source_, path.empty() ? "/" : path, what);
  }

 private:
  std::string source_;
};

Family parse_family(const json& fam, const ParameterSpace& space, const Reader& r) {
  const std::string name = r.string(r.field(fam, "name", "/family"), "/family/name");
  if (name == "gaussian_known_var") {
    return GaussianKnownVar{r.number(r.field(fam, "sigma", "/family"), "/family/sigma")};
  }
  if (name == "poisson") return Poisson{};
  if (name == "bernoulli_power") {
    return BernoulliPower{r.number(r.field(fam, "k", "/family"), "/family/k")};
  }
  if (name == "categorical") {
    Categorical c;
    const auto& support = r.field(fam, "support", "/family");
    if (!support.is_array()) r.fail("/family/support", "expected an array of labels");
    for (std::size_t k = 0; k < support.size(); ++k)
      c.support.push_back(r.string(support[k], "/family/support/" + std::to_string(k)));
    const auto& pmf = r.field(fam, "pmf", "/family");
    if (!pmf.is_array()) r.fail("/family/pmf", "expected one probability row per parameter point");
    if (pmf.size() != space.size()) r.fail("/family/pmf", "expected one probability row per parameter point");
    for (std::size_t k = 0; k < pmf.size(); ++k) c.pmf.push_back(r.numbers(pmf[k], "/family/pmf/" + std::to_string(k)));
    return c;
  }
  r.fail("/family/name", "unknown family \"" + name + "\"");
}

}  // namespace

SpecError::SpecError(const std::string& source, std::size_t line, std::size_t column, const std::string& what)
    : ValidationError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

SpecError::SpecError(const std::string& source, const std::string& where, const std::string& what)
    : ValidationError(source + ": " + where + ": " + what) {}

ModelSpec parse_model_spec(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points one past the offending character.
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string what = e.what();
    if (const auto pos = what.find("parse error"); pos != std::string::npos) what = what.substr(pos);
    throw SpecError(source, line, col, what);
  }
  const Reader r(source);
  if (!doc.is_object()) r.fail("", "expected a JSON object");

  const auto& points = r.field(r.field(doc, "space", ""), "points", "/space");
  if (!points.is_array()) r.fail("/space/points", "expected an array");
  std::vector<ParamPoint> pts;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const std::string path = "/space/points/" + std::to_string(k);
    ParamPoint p;
    p.label = r.string(r.field(points[k], "label", path), path + "/label");
    if (const auto it = points[k].find("value"); it != points[k].end()) {
      p.value = it->is_number() ? std::vector<double>{it->get<double>()} : r.numbers(*it, path + "/value");
    }
    pts.push_back(std::move(p));
  }

  try {
    ParameterSpace space(std::move(pts));
    Family family = parse_family(r.field(doc, "family", ""), space, r);
    ModelSpec out{Model(std::move(space), std::move(family)), std::nullopt};
    if (const auto it = doc.find("prior"); it != doc.end() && !it->is_null()) {
      auto w = r.numbers(*it, "/prior");
      if (w.size() != out.model.space().size()) r.fail("/prior", "prior length must match the number of points");
      out.prior = Prior(std::move(w));
    }
    return out;
  } catch (const SpecError&) {
    throw;
  } catch (const ValidationError& e) {
    throw SpecError(source, "/", e.what());
  }
}

ModelSpec load_model_spec(const std::filesystem::path& path) {
  return parse_model_spec(read_file(path), path.string());
}

json model_spec_to_json(const Model& model, const std::optional<Prior>& prior) {
  json pts = json::array();
  for (const auto& p : model.space().points()) pts.push_back({{"label", p.label}, {"value", p.value}});
  json fam;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GaussianKnownVar>) {
          fam = {{"name", "gaussian_known_var"}, {"sigma", f.sigma}};
        } else if constexpr (std::is_same_v<T, Poisson>) {
          fam = {{"name", "poisson"}};
        } else if constexpr (std::is_same_v<T, BernoulliPower>) {
          fam = {{"name", "bernoulli_power"}, {"k", f.k}};
        } else if constexpr (std::is_same_v<T, Categorical>) {
          fam = {{"name", "categorical"}, {"support", f.support}, {"pmf", f.pmf}};
        } else {
          fam = {{"name", "empirical"}};
        }
      },
      model.family());
  json out = {{"space", {{"points", pts}}}, {"family", fam}};
  if (prior) out["prior"] = prior->weights();
  return out;
}

std::vector<Observation> parse_data(std::string_view text, const Model& model, const std::string& source) {
  std::vector<std::string> labels;
  if (const auto* c = std::get_if<Categorical>(&model.family())) labels = c->support;
  if (std::holds_alternative<BernoulliPower>(model.family())) labels = {"failure", "success"};

  std::vector<Observation> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string token = line.substr(first, last - first + 1);

    Observation y = 0.0;
    bool parsed = false;
    for (std::size_t k = 0; k < labels.size() && !parsed; ++k) {
      if (labels[k] == token) {
        y = static_cast<Observation>(k);
        parsed = true;
      }
    }
    if (!parsed) {
      const auto res = std::from_chars(token.data(), token.data() + token.size(), y);
      if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw SpecError(source, lineno, first + 1, "cannot read observation \"" + token + "\"");
    }
    try {
      model.check_observation(y);
    } catch (const ValidationError& e) {
      throw SpecError(source, lineno, first + 1, e.what());
    }
    out.push_back(y);
  }
  return out;
}

std::vector<Observation> load_data(const std::filesystem::path& path, const Model& model) {
  return parse_data(read_file(path), model, path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dpe
