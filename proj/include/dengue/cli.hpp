#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dengue/config.hpp"
#include "dengue/simulate.hpp"
#include "dengue/solver.hpp"
#include "dengue/transcription.hpp"

namespace dengue::cli {

enum class Mode { Simulate, Solve, Bench };

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitSolverFailure = 1;
inline constexpr int kExitConfigError = 2;

struct RunConfig {
  Mode mode = Mode::Solve;
  Scheme scheme = Scheme::Euler;
  double h = 0.5;
  std::optional<std::filesystem::path> params_file;
  std::filesystem::path output_dir = ".";
  ProblemSetup setup;
  SolverOptions solver;
  ControlBounds bounds;
  ControlVec simulate_control = ControlVec::Zero();  ///< constant schedule for simulate
  std::vector<Scheme> bench_schemes{Scheme::Euler, Scheme::Trapezoidal};
  std::vector<double> bench_steps{0.5, 0.25, 0.125};
  int parallel = 1;

  /// Throws ConfigError.
  void validate() const;
};

/// Applies run keys from a config file (scheme, h, tol_feas, tol_opt,
/// max_outer, u_max, u1, u2, parallel) and the model keys. Unknown keys throw.
void apply_config_entries(ConfigEntries entries, RunConfig& config);

NlpProblem make_problem(const RunConfig& config, Scheme scheme, double h);

/// Writes trajectory.csv.
Trajectory run_simulate(const RunConfig& config, std::ostream& log);

struct SolveOutcome {
  NlpProblem problem;
  SolveReport report;
};

/// Writes report.json and solution.csv.
SolveOutcome run_solve(const RunConfig& config, std::ostream& log);

struct BenchRow {
  Scheme scheme = Scheme::Euler;
  double h = 0.0;
  int n_vars = 0;
  int n_cons = 0;
  std::optional<SolveReport> report;  ///< empty when the run threw
  std::string error;
};

inline constexpr const char* kBenchCsvHeader =
    "scheme,h,n_vars,n_cons,outer_iters,inner_iters,objective,feas,kkt,wall_time_s";

/// Published (n_vars, n_cons) for the reference grid, when known.
std::optional<std::pair<int, int>> reference_problem_size(Scheme scheme, double h);

/// Runs the scheme x step grid and writes bench.csv and bench.txt.
std::vector<BenchRow> run_bench(const RunConfig& config, std::ostream& log);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);
void write_bench_table(std::ostream& out, const std::vector<BenchRow>& rows);

/// Parses arguments and runs the selected mode; returns the process exit code.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dengue::cli
