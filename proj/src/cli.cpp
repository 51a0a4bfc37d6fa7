#include "dengue/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "dengue/io.hpp"

namespace dengue::cli {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void prepare_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
}

int parse_count(std::string_view key, std::string_view text) {
  const double v = parse_number(key, text);
  if (v != std::floor(v) || v < 1 || v > 1e9) {
    throw ConfigError("key '" + std::string(key) + "' must be a positive integer");
  }
  return static_cast<int>(v);
}

}  // namespace

void RunConfig::validate() const {
  try {
    setup.params.validate();
    solver.validate();
    (void)Grid::uniform(setup.t_final, h);
    for (double step : bench_steps) (void)Grid::uniform(setup.t_final, step);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if ((bounds.lower.array() > bounds.upper.array()).any()) {
    throw ConfigError("u_max is below the control lower bound");
  }
  if (parallel < 1) throw ConfigError("parallel must be at least 1");
  if (bench_schemes.empty() || bench_steps.empty()) throw ConfigError("empty bench grid");
}

void apply_config_entries(ConfigEntries entries, RunConfig& config) {
  take_problem_keys(entries, config.setup);
  for (auto it = entries.begin(); it != entries.end();) {
    const std::string& key = it->first;
    const std::string& value = it->second;
    if (key == "scheme") {
      try {
        config.scheme = parse_scheme(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "h") {
      config.h = parse_number(key, value);
    } else if (key == "tol_feas") {
      config.solver.tol_feas = parse_number(key, value);
    } else if (key == "tol_opt") {
      config.solver.tol_opt = parse_number(key, value);
    } else if (key == "max_outer") {
      config.solver.max_outer = parse_count(key, value);
    } else if (key == "u_max") {
      config.bounds.upper.setConstant(parse_number(key, value));
    } else if (key == "u1") {
      config.simulate_control[0] = parse_number(key, value);
    } else if (key == "u2") {
      config.simulate_control[1] = parse_number(key, value);
    } else if (key == "parallel") {
      config.parallel = parse_count(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
    it = entries.erase(it);
  }
}

NlpProblem make_problem(const RunConfig& config, Scheme scheme, double h) {
  return build(Grid::uniform(config.setup.t_final, h), scheme, config.setup.params,
               config.setup.x_init, config.bounds);
}

Trajectory run_simulate(const RunConfig& config, std::ostream& log) {
  config.validate();
  prepare_output_dir(config.output_dir);
  const Grid grid = Grid::uniform(config.setup.t_final, config.h);
  const auto schedule = ControlSchedule::constant(grid, config.scheme, config.simulate_control);
  Trajectory traj = simulate(schedule, config.scheme, config.setup.x_init, config.setup.params);

  const auto path = config.output_dir / "trajectory.csv";
  auto out = open_output(path);
  write_trajectory_csv(out, traj);
  log << "simulate " << to_string(config.scheme) << " h=" << format_double(config.h) << ": "
      << traj.states.size() << " nodes, final x5 = " << format_double(traj.states.back()[4])
      << "\nwrote " << path.string() << '\n';
  return traj;
}

SolveOutcome run_solve(const RunConfig& config, std::ostream& log) {
  config.validate();
  prepare_output_dir(config.output_dir);
  SolveOutcome outcome{make_problem(config, config.scheme, config.h), {}};
  const auto& problem = outcome.problem;
  outcome.report = solve(problem, initial_guess(problem), config.solver);
  const auto& report = outcome.report;

  {
    auto out = open_output(config.output_dir / "report.json");
    out << report_to_json(problem, config.solver, report).dump(2) << '\n';
  }
  {
    auto out = open_output(config.output_dir / "solution.csv");
    write_trajectory_csv(out, report.trajectory);
  }
  log << "solve " << to_string(problem.scheme) << " h=" << format_double(problem.grid.h)
      << " n_vars=" << problem.n_vars() << " n_cons=" << problem.n_cons() << '\n'
      << "status " << to_string(report.status) << "  objective " << format_double(report.objective)
      << "  outer " << report.outer_iters << "  inner " << report.inner_iters_total << "  feas "
      << format_double(report.feas_inf_norm) << "  kkt " << format_double(report.kkt_inf_norm)
      << "  time " << report.wall_time << " s\n";
  if (!report.note.empty()) log << "note: " << report.note << '\n';
  return outcome;
}

std::optional<std::pair<int, int>> reference_problem_size(Scheme scheme, double h) {
  const int idx = h == 0.5 ? 0 : h == 0.25 ? 1 : h == 0.125 ? 2 : -1;
  if (idx < 0) return std::nullopt;
  static constexpr std::pair<int, int> kEuler[] = {{727, 519}, {1455, 1039}, {2911, 2079}};
  static constexpr std::pair<int, int> kTrapezoidal[] = {{728, 520}, {1456, 1040}, {2912, 2080}};
  return scheme == Scheme::Euler ? kEuler[idx] : kTrapezoidal[idx];
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << kBenchCsvHeader << '\n';
  for (const auto& row : rows) {
    out << to_string(row.scheme) << ',' << format_double(row.h) << ',' << row.n_vars << ','
        << row.n_cons << ',';
    if (row.report) {
      const auto& r = *row.report;
      out << r.outer_iters << ',' << r.inner_iters_total << ',' << format_double(r.objective)
          << ',' << format_double(r.feas_inf_norm) << ',' << format_double(r.kkt_inf_norm) << ','
          << format_double(r.wall_time);
    } else {
      out << ",,,,,";
    }
    out << '\n';
  }
}

void write_bench_table(std::ostream& out, const std::vector<BenchRow>& rows) {
  std::ostringstream text;
  text.imbue(std::locale::classic());
  for (Scheme scheme : {Scheme::Euler, Scheme::Trapezoidal}) {
    bool header = false;
    for (const auto& row : rows) {
      if (row.scheme != scheme) continue;
      if (!header) {
        text << to_string(scheme) << '\n'
             << "      h   # var.  # const.  ref var.  ref const.  # outer  # inner"
                "    objective   time (s)  status\n";
        header = true;
      }
      const auto ref = reference_problem_size(row.scheme, row.h);
      char line[256];
      std::snprintf(line, sizeof line, "%7.4g  %7d  %8d  %8s  %10s", row.h, row.n_vars,
                    row.n_cons, ref ? std::to_string(ref->first).c_str() : "-",
                    ref ? std::to_string(ref->second).c_str() : "-");
      text << line;
      if (row.report) {
        const auto& r = *row.report;
        std::snprintf(line, sizeof line, "  %7d  %7d  %11.5e  %9.3f  %s", r.outer_iters,
                      r.inner_iters_total, r.objective, r.wall_time,
                      std::string(to_string(r.status)).c_str());
        text << line;
      } else {
        text << "  error: " << row.error;
      }
      text << '\n';
    }
    if (header) text << '\n';
  }
  out << text.str();
}

std::vector<BenchRow> run_bench(const RunConfig& config, std::ostream& log) {
  config.validate();
  prepare_output_dir(config.output_dir);

  std::vector<BenchRow> rows;
  for (Scheme scheme : config.bench_schemes) {
    for (double h : config.bench_steps) {
      BenchRow row;
      row.scheme = scheme;
      row.h = h;
      rows.push_back(std::move(row));
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      auto& row = rows[i];
      try {
        const auto problem = make_problem(config, row.scheme, row.h);
        row.n_vars = problem.n_vars();
        row.n_cons = problem.n_cons();
        row.report = solve(problem, initial_guess(problem), config.solver);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const int n_workers = std::min<int>(config.parallel, static_cast<int>(rows.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  {
    auto out = open_output(config.output_dir / "bench.csv");
    write_bench_csv(out, rows);
  }
  {
    auto out = open_output(config.output_dir / "bench.txt");
    write_bench_table(out, rows);
  }
  write_bench_table(log, rows);
  return rows;
}

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dengue epidemic optimal control by direct transcription"};
  app.set_help_flag("--help", "print help and exit");
  app.require_subcommand(1);

  std::optional<std::string> scheme_flag;
  std::optional<double> h_flag, tol_feas_flag, tol_opt_flag, u_max_flag;
  std::optional<int> max_outer_flag, parallel_flag;
  std::optional<std::string> config_flag;
  std::string out_dir = ".";
  bool verbose = false;

  auto add_common = [&](CLI::App* sub) {
    sub->set_help_flag("--help", "print help and exit");
    sub->add_option("--scheme", scheme_flag, "euler or trapezoidal");
    sub->add_option("--h", h_flag, "step size in weeks");
    sub->add_option("--config", config_flag, "key=value configuration file");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--tol-feas", tol_feas_flag, "constraint residual tolerance");
    sub->add_option("--tol-opt", tol_opt_flag, "stationarity tolerance");
    sub->add_option("--max-outer", max_outer_flag, "outer iteration limit");
    sub->add_option("--u-max", u_max_flag, "upper bound on both controls");
    sub->add_flag("--verbose", verbose, "log solver progress to stderr");
  };
  auto* sim = app.add_subcommand("simulate", "integrate with a constant control");
  auto* sol = app.add_subcommand("solve", "solve one transcription");
  auto* bench = app.add_subcommand("bench", "solve the scheme x step grid");
  for (auto* sub : {sim, sol, bench}) add_common(sub);
  bench->add_option("--parallel", parallel_flag, "concurrent solves");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  RunConfig config;
  config.mode = sim->parsed() ? Mode::Simulate : sol->parsed() ? Mode::Solve : Mode::Bench;
  try {
    if (config_flag) {
      config.params_file = *config_flag;
      apply_config_entries(read_config_file(*config_flag), config);
    }
    if (scheme_flag) {
      try {
        config.scheme = parse_scheme(*scheme_flag);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    if (h_flag) config.h = *h_flag;
    if (tol_feas_flag) config.solver.tol_feas = *tol_feas_flag;
    if (tol_opt_flag) config.solver.tol_opt = *tol_opt_flag;
    if (max_outer_flag) config.solver.max_outer = *max_outer_flag;
    if (u_max_flag) config.bounds.upper.setConstant(*u_max_flag);
    if (parallel_flag) config.parallel = *parallel_flag;
    config.solver.verbose = verbose;
    config.output_dir = out_dir;
    config.validate();
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    switch (config.mode) {
      case Mode::Simulate:
        run_simulate(config, out);
        return kExitOk;
      case Mode::Solve: {
        const auto outcome = run_solve(config, out);
        return outcome.report.status == SolveStatus::Converged ? kExitOk : kExitSolverFailure;
      }
      case Mode::Bench: {
        const auto rows = run_bench(config, out);
        for (const auto& row : rows) {
          if (!row.report || row.report->status != SolveStatus::Converged) return kExitSolverFailure;
        }
        return kExitOk;
      }
    }
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolverFailure;
  }
  return kExitOk;
}

}  // namespace dengue::cli
