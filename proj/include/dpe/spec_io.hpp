#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpe/error.hpp"
#include "dpe/model.hpp"

namespace dpe {

// Malformed spec or data file. Carries a 1-based line/column when known.
class SpecError : public ValidationError {
 public:
  SpecError(const std::string& source, std::size_t line, std::size_t column, const std::string& what);
  SpecError(const std::string& source, const std::string& where, const std::string& what);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_ = 0;
  std::size_t column_ = 0;
};

struct ModelSpec {
  Model model;
  std::optional<Prior> prior;
};

// {"space": {"points": [{"label": "...", "value": [...]}, ...]},
//  "family": {"name": "gaussian_known_var" | "poisson" | "bernoulli_power" | "categorical", ...},
//  "prior": [...]}
ModelSpec parse_model_spec(std::string_view text, const std::string& source = "<spec>");
ModelSpec load_model_spec(const std::filesystem::path& path);
nlohmann::json model_spec_to_json(const Model& model, const std::optional<Prior>& prior);

// One observation per line; blank lines and '#' comments are skipped. Categorical
// lines may hold a support label or a symbol index, bernoulli_power lines 0/1 or
// failure/success.
std::vector<Observation> parse_data(std::string_view text, const Model& model, const std::string& source = "<data>");
std::vector<Observation> load_data(const std::filesystem::path& path, const Model& model);

std::string read_file(const std::filesystem::path& path);

}  // namespace dpe
