#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>

#include "dengue/model.hpp"

namespace dengue {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ConfigEntries = std::map<std::string, std::string, std::less<>>;

/// Parses flat `key = value` text. `#` starts a comment; blank lines are
/// ignored; a repeated key is an error.
ConfigEntries parse_config(std::istream& in);
ConfigEntries read_config_file(const std::filesystem::path& path);

/// Locale-independent number parsing; throws ConfigError naming `key`.
double parse_number(std::string_view key, std::string_view text);

/// Everything needed to pose the control problem apart from discretization.
struct ProblemSetup {
  ModelParams params;
  StateVec x_init = default_initial_state();
  double t_final = 52.0;
};

/// Moves the model keys (parameters, x1_0..x4_0, t_final) out of `entries`
/// into `setup`, leaving unrelated keys behind. Missing keys keep defaults.
void take_problem_keys(ConfigEntries& entries, ProblemSetup& setup);

/// Loads a pure model file; any key that is not a model key is an error.
ProblemSetup load_problem_setup(const std::filesystem::path& path);

}  // namespace dengue
