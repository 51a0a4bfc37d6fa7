#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"

#include "dengue/simulate.hpp"
#include "dengue/solver.hpp"
#include "dengue/transcription.hpp"

namespace dengue {

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_double(double value);

inline constexpr const char* kTrajectoryCsvHeader = "t,x1,x2,x3,x4,x5,u1,u2";

/// One row per node; u1,u2 are blank on nodes without a control (Euler node N).
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);

/// Parses the format written by write_trajectory_csv. Controls must occupy a
/// prefix of the rows. Throws std::runtime_error on malformed input.
Trajectory read_trajectory_csv(std::istream& in);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

nlohmann::json layout_to_json(const Layout& layout);
nlohmann::json params_to_json(const ModelParams& params);
nlohmann::json options_to_json(const SolverOptions& opts);

/// Problem descriptor: scheme, mesh, sizes, bounds (null = unbounded), layout.
nlohmann::json problem_to_json(const NlpProblem& problem);

/// Full run summary, including the final multipliers so the certificate can
/// be recomputed from the solution file.
nlohmann::json report_to_json(const NlpProblem& problem, const SolverOptions& opts,
                              const SolveReport& report);

}  // namespace dengue
