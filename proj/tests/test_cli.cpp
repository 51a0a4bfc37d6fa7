#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "doctest.h"

#include "dengue/cli.hpp"
#include "dengue/io.hpp"

using namespace dengue;
using namespace dengue::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dengue_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

int run(std::vector<std::string> args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
  args.insert(args.begin(), "dengue_ocp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

// Drops the trailing wall-time column.
std::string without_timing(const std::string& csv) {
  std::string out;
  for (const auto& line : lines(csv)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

}  // namespace

TEST_CASE("simulate writes the uncontrolled trajectory") {
  RunConfig config;
  config.mode = Mode::Simulate;
  config.output_dir = scratch("simulate");
  std::ostringstream log;
  const auto traj = run_simulate(config, log);
  const auto rows = lines(slurp(config.output_dir / "trajectory.csv"));
  REQUIRE(rows.size() == 106);
  CHECK(rows.front() == kTrajectoryCsvHeader);
  CHECK(rows[1].rfind("0,1,0.12,0.004,0.05,0,0,0", 0) == 0);
  CHECK(rows.back().rfind("52,", 0) == 0);
  CHECK(log.str().find("trajectory.csv") != std::string::npos);

  const auto back = read_trajectory_csv(config.output_dir / "trajectory.csv");
  CHECK(back.states.back() == traj.states.back());
  CHECK(back.states.back()[4] > 0.0);
}

TEST_CASE("simulate from the zero state") {
  const fs::path dir = scratch("simulate_zero");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "zero.cfg");
    cfg << "x1_0 = 0\nx2_0 = 0\nx3_0 = 0\nx4_0 = 0\n";
  }
  REQUIRE(run({"simulate", "--config", (dir / "zero.cfg").string(), "--out", dir.string(),
               "--scheme", "trapezoidal"}) == kExitOk);
  const auto rows = lines(slurp(dir / "trajectory.csv"));
  REQUIRE(rows.size() == 106);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].substr(rows[i].find(',')) == ",0,0,0,0,0,0,0");
  }
}

TEST_CASE("solve writes a report that can be re-verified from disk") {
  RunConfig config;
  config.scheme = Scheme::Trapezoidal;
  config.output_dir = scratch("solve");
  std::ostringstream log;
  const auto outcome = run_solve(config, log);
  REQUIRE(outcome.report.status == SolveStatus::Converged);

  const auto report = nlohmann::json::parse(slurp(config.output_dir / "report.json"));
  CHECK(report["status"] == "Converged");
  CHECK(report["problem"]["n_vars"] == 730);
  CHECK(report["problem"]["n_cons"] == 520);
  CHECK(report["problem"]["scheme"] == "trapezoidal");
  CHECK(report["problem"]["bounds"]["u1"]["upper"].is_null());
  CHECK(report["objective"].get<double>() == outcome.report.objective);
  for (const char* key : {"outer_iters", "inner_iters_total", "feas_inf_norm", "kkt_inf_norm",
                          "wall_time_s", "options", "multipliers"}) {
    CHECK_MESSAGE(report.contains(key), key);
  }

  const auto& problem = outcome.problem;
  const auto traj = read_trajectory_csv(config.output_dir / "solution.csv");
  const Eigen::VectorXd z = pack_trajectory(traj, problem.layout);
  const auto mult = report["multipliers"].get<std::vector<double>>();
  REQUIRE(static_cast<int>(mult.size()) == problem.n_cons());
  const Eigen::VectorXd lambda = Eigen::Map<const Eigen::VectorXd>(mult.data(), mult.size());
  const auto r = kkt_residuals(z, lambda, problem);
  CHECK(std::abs(r.feasibility - report["feas_inf_norm"].get<double>()) <= 1e-12);
  CHECK(std::abs(r.stationarity - report["kkt_inf_norm"].get<double>()) <= 1e-12);
  CHECK(objective(z, problem) == report["objective"].get<double>());
}

TEST_CASE("tighter feasibility tolerance is honoured") {
  RunConfig config;
  config.solver.tol_feas = 1e-8;
  config.output_dir = scratch("solve_tight");
  std::ostringstream log;
  const auto outcome = run_solve(config, log);
  CHECK(outcome.report.status == SolveStatus::Converged);
  CHECK(defects(outcome.report.solution, outcome.problem).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("exit");
  std::string out, err;
  CHECK(run({"solve", "--scheme", "rk4", "--out", dir.string()}, &out, &err) == kExitConfigError);
  CHECK(err.find("configuration error") != std::string::npos);
  CHECK(run({"solve", "--h", "0.3", "--out", dir.string()}) == kExitConfigError);
  CHECK(run({"solve", "--h", "-1", "--out", dir.string()}) == kExitConfigError);
  CHECK(run({"solve", "--config", (dir / "missing.cfg").string()}) == kExitConfigError);
  CHECK(run({"frobnicate"}) == kExitConfigError);
  CHECK(run({}) == kExitConfigError);
  CHECK(run({"--help"}, &out) == kExitOk);
  CHECK(out.find("solve") != std::string::npos);
  CHECK(run({"solve", "--max-outer", "1", "--out", dir.string()}) == kExitSolverFailure);
  CHECK(run({"solve", "--out", dir.string()}) == kExitOk);

  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "bad.cfg");
    cfg << "scheme = euler\nbogus_key = 1\n";
  }
  CHECK(run({"solve", "--config", (dir / "bad.cfg").string(), "--out", dir.string()}, &out,
            &err) == kExitConfigError);
  CHECK(err.find("bogus_key") != std::string::npos);
}

TEST_CASE("flags override the config file") {
  ConfigEntries entries{{"scheme", "trapezoidal"}, {"h", "0.25"}, {"tol_opt", "1e-5"},
                        {"u_max", "2"}, {"beta", "0.4"}};
  RunConfig config;
  apply_config_entries(entries, config);
  CHECK(config.scheme == Scheme::Trapezoidal);
  CHECK(config.h == 0.25);
  CHECK(config.solver.tol_opt == 1e-5);
  CHECK(config.bounds.upper == ControlVec(2, 2));
  CHECK(config.setup.params.beta == 0.4);

  const fs::path dir = scratch("precedence");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "scheme = trapezoidal\nh = 0.25\n";
  }
  REQUIRE(run({"simulate", "--config", (dir / "run.cfg").string(), "--h", "0.5", "--scheme",
               "euler", "--out", dir.string()}) == kExitOk);
  const auto rows = lines(slurp(dir / "trajectory.csv"));
  CHECK(rows.size() == 106);
  CHECK(rows.back().substr(rows.back().size() - 2) == ",,");  // Euler: no final control
}

TEST_CASE("bench") {
  RunConfig config;
  config.mode = Mode::Bench;
  config.setup.t_final = 8.0;
  config.bench_steps = {0.5, 0.25};
  config.output_dir = scratch("bench_serial");
  std::ostringstream log;
  const auto serial = run_bench(config, log);
  REQUIRE(serial.size() == 4);
  for (const auto& row : serial) {
    REQUIRE(row.report.has_value());
    CHECK(row.report->status == SolveStatus::Converged);
  }
  CHECK(serial[0].n_vars == 7 * 16);
  CHECK(serial[2].n_vars == 7 * 16 + 2);
  const std::string csv = slurp(config.output_dir / "bench.csv");
  CHECK(lines(csv).front() == kBenchCsvHeader);
  CHECK(lines(csv).size() == 5);
  CHECK(fs::exists(config.output_dir / "bench.txt"));

  RunConfig parallel = config;
  parallel.parallel = 3;
  parallel.output_dir = scratch("bench_parallel");
  const auto threaded = run_bench(parallel, log);
  REQUIRE(threaded.size() == serial.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(threaded[i].report->solution == serial[i].report->solution);
  }
  CHECK(without_timing(slurp(parallel.output_dir / "bench.csv")) == without_timing(csv));
}

TEST_CASE("reference problem sizes stay within three of the formula counts") {
  for (Scheme scheme : {Scheme::Euler, Scheme::Trapezoidal}) {
    for (double h : {0.5, 0.25, 0.125}) {
      RunConfig config;
      const auto problem = make_problem(config, scheme, h);
      const auto ref = reference_problem_size(scheme, h);
      REQUIRE(ref.has_value());
      CHECK(std::abs(problem.n_vars() - ref->first) <= 3);
      CHECK(std::abs(problem.n_cons() - ref->second) <= 3);
    }
  }
  CHECK(!reference_problem_size(Scheme::Euler, 0.1).has_value());
}
