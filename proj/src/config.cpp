#include "dengue/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>
#include <utility>

namespace dengue {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

ConfigEntries parse_config(std::istream& in) {
  ConfigEntries entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;

    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(view.substr(0, eq));
    const auto value = trim(view.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    }
    if (!entries.emplace(std::string(key), std::string(value)).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" +
                        std::string(key) + "'");
    }
  }
  return entries;
}

ConfigEntries read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

double parse_number(std::string_view key, std::string_view text) {
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw ConfigError("key '" + std::string(key) + "': not a finite number: '" +
                      std::string(text) + "'");
  }
  return value;
}

void take_problem_keys(ConfigEntries& entries, ProblemSetup& setup) {
  auto& p = setup.params;
  const std::pair<const char*, double*> slots[] = {
      {"alpha_r", &p.alpha_r}, {"alpha_m", &p.alpha_m}, {"beta", &p.beta},
      {"eta", &p.eta},         {"mu", &p.mu},           {"rho", &p.rho},
      {"theta", &p.theta},     {"tau", &p.tau},         {"phi", &p.phi},
      {"omega", &p.omega},     {"p_total", &p.p_total}, {"gamma_d", &p.gamma_d},
      {"gamma_f", &p.gamma_f}, {"gamma_e", &p.gamma_e}, {"x1_0", &setup.x_init[0]},
      {"x2_0", &setup.x_init[1]}, {"x3_0", &setup.x_init[2]},
      {"x4_0", &setup.x_init[3]}, {"t_final", &setup.t_final},
  };
  for (const auto& [key, slot] : slots) {
    const auto it = entries.find(key);
    if (it == entries.end()) continue;
    *slot = parse_number(key, it->second);
    entries.erase(it);
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(setup.t_final > 0)) throw ConfigError("t_final must be positive");
}

ProblemSetup load_problem_setup(const std::filesystem::path& path) {
  auto entries = read_config_file(path);
  ProblemSetup setup;
  take_problem_keys(entries, setup);
  if (!entries.empty()) {
    throw ConfigError("unknown key '" + entries.begin()->first + "' in " + path.string());
  }
  return setup;
}

}  // namespace dengue
