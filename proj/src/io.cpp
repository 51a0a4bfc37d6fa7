#include "dengue/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dengue {

namespace {

nlohmann::json bound_value(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_field(const std::string& text, int line_no) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::runtime_error("trajectory csv line " + std::to_string(line_no) +
                             ": bad number '" + text + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << kTrajectoryCsvHeader << '\n';
  const auto& controls = trajectory.controls.values;
  for (std::size_t k = 0; k < trajectory.states.size(); ++k) {
    out << format_double(trajectory.grid.time(static_cast<int>(k)));
    for (int i = 0; i < kStateDim; ++i) out << ',' << format_double(trajectory.states[k][i]);
    if (k < controls.size()) {
      out << ',' << format_double(controls[k][0]) << ',' << format_double(controls[k][1]);
    } else {
      out << ",,";
    }
    out << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trajectory_csv(out, trajectory);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryCsvHeader) {
    throw std::runtime_error("trajectory csv: missing or unexpected header");
  }
  std::vector<double> times;
  Trajectory traj;
  int line_no = 1;
  bool controls_ended = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 8) {
      throw std::runtime_error("trajectory csv line " + std::to_string(line_no) +
                               ": expected 8 fields");
    }
    times.push_back(parse_field(fields[0], line_no));
    StateVec x;
    for (int i = 0; i < kStateDim; ++i) x[i] = parse_field(fields[1 + i], line_no);
    traj.states.push_back(x);
    if (fields[6].empty() && fields[7].empty()) {
      controls_ended = true;
    } else {
      if (controls_ended) {
        throw std::runtime_error("trajectory csv line " + std::to_string(line_no) +
                                 ": control after a blank control row");
      }
      traj.controls.values.emplace_back(parse_field(fields[6], line_no),
                                        parse_field(fields[7], line_no));
    }
  }
  if (times.size() < 2) throw std::runtime_error("trajectory csv: need at least two nodes");
  traj.grid = Grid::uniform(times.back(), times[1] - times[0]);
  if (traj.grid.n_steps + 1 != static_cast<int>(times.size())) {
    // Fall back to the row count when the printed step is not exact.
    traj.grid = Grid::uniform(times.back(), times.back() / static_cast<double>(times.size() - 1));
  }
  traj.controls.grid = traj.grid;
  return traj;
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_trajectory_csv(in);
}

nlohmann::json layout_to_json(const Layout& layout) {
  return {
      {"ordering", layout.scheme == Scheme::Euler ? "[x(k) u(k-1)] for k=1..N"
                                                  : "[u(0)] then [x(k) u(k)] for k=1..N"},
      {"block_size", Layout::kBlock},
      {"leading_controls", layout.leading_controls()},
      {"state_nodes", layout.n_steps},
      {"control_nodes", layout.n_control_nodes()},
      {"first_control_node", 0},
      {"size", layout.size()},
  };
}

nlohmann::json params_to_json(const ModelParams& p) {
  return {{"alpha_r", p.alpha_r}, {"alpha_m", p.alpha_m}, {"beta", p.beta},
          {"eta", p.eta},         {"mu", p.mu},           {"rho", p.rho},
          {"theta", p.theta},     {"tau", p.tau},         {"phi", p.phi},
          {"omega", p.omega},     {"p_total", p.p_total}, {"gamma_d", p.gamma_d},
          {"gamma_f", p.gamma_f}, {"gamma_e", p.gamma_e}};
}

nlohmann::json options_to_json(const SolverOptions& o) {
  return {{"tol_feas", o.tol_feas},
          {"tol_opt", o.tol_opt},
          {"penalty_init", o.penalty_init},
          {"penalty_growth", o.penalty_growth},
          {"feas_decrease", o.feas_decrease},
          {"max_outer", o.max_outer},
          {"max_inner", o.max_inner},
          {"lbfgs_memory", o.lbfgs_memory},
          {"inner_tol_init", o.inner_tol_init},
          {"precond_shift", o.precond_shift}};
}

nlohmann::json problem_to_json(const NlpProblem& problem) {
  const auto& b = problem.control_bounds;
  return {
      {"scheme", std::string(to_string(problem.scheme))},
      {"t_final", problem.grid.t_final},
      {"h", problem.grid.h},
      {"n_steps", problem.grid.n_steps},
      {"n_vars", problem.n_vars()},
      {"n_cons", problem.n_cons()},
      {"jacobian_nonzeros", structural_nonzeros(problem)},
      {"x_init", std::vector<double>(problem.x_init.begin(), problem.x_init.end())},
      {"bounds",
       {{"states", {{"lower", nullptr}, {"upper", nullptr}}},
        {"u1", {{"lower", bound_value(b.lower[0])}, {"upper", bound_value(b.upper[0])}}},
        {"u2", {{"lower", bound_value(b.lower[1])}, {"upper", bound_value(b.upper[1])}}}}},
      {"layout", layout_to_json(problem.layout)},
      {"params", params_to_json(problem.params)},
  };
}

nlohmann::json report_to_json(const NlpProblem& problem, const SolverOptions& opts,
                              const SolveReport& report) {
  return {
      {"problem", problem_to_json(problem)},
      {"options", options_to_json(opts)},
      {"status", std::string(to_string(report.status))},
      {"objective", report.objective},
      {"outer_iters", report.outer_iters},
      {"inner_iters_total", report.inner_iters_total},
      {"feas_inf_norm", report.feas_inf_norm},
      {"kkt_inf_norm", report.kkt_inf_norm},
      {"wall_time_s", report.wall_time},
      {"final_penalty", report.penalty},
      {"note", report.note},
      {"multipliers",
       std::vector<double>(report.multipliers.data(),
                           report.multipliers.data() + report.multipliers.size())},
  };
}

}  // namespace dengue
