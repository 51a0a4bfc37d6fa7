#include <clocale>
#include <cmath>
#include <sstream>

#include "doctest.h"

#include "dengue/io.hpp"
#include "dengue/simulate.hpp"
#include "test_support.hpp"

using namespace dengue;
using doctest::Approx;

namespace {

Trajectory uncontrolled(Scheme scheme, double h) {
  const Grid grid = Grid::uniform(52.0, h);
  return simulate(ControlSchedule::constant(grid, scheme, ControlVec::Zero()), scheme,
                  default_initial_state(), ModelParams{});
}

}  // namespace

TEST_CASE("step_euler") {
  const ModelParams p;
  const StateVec x = default_initial_state();
  const StateVec y = step_euler(0.0, x, ControlVec::Zero(), 0.5, p);
  CHECK(y[0] == Approx(0.985).epsilon(1e-14));
  CHECK(y[2] == Approx(0.009676).epsilon(1e-13));  // 0.004 + 0.5 * 0.011352

  CHECK(step_euler(3.0, StateVec::Zero(), ControlVec::Zero(), 0.5, p) == StateVec::Zero());
  CHECK(step_euler(3.0, x, ControlVec(0.2, 0.1), 0.0, p) == x);
}

TEST_CASE("step_trapezoidal at the equilibrium needs no Newton iterations") {
  const ModelParams p;
  const auto step = trapezoidal_newton(
      0.5, StateVec::Zero(), StateVec::Zero(), 0.5,
      [&](double t, const StateVec& y) { return dynamics(t, y, ControlVec::Zero(), p); },
      [&](double t, const StateVec& y) { return jacobian_x(t, y, ControlVec::Zero(), p); });
  CHECK(step.iterations == 0);
  CHECK(step.y == StateVec::Zero());
  CHECK(step_trapezoidal(0.0, StateVec::Zero(), ControlVec::Zero(), ControlVec::Zero(), 0.5, p) ==
        StateVec::Zero());
}

TEST_CASE("step_trapezoidal on a linear field matches the closed form") {
  for (double k : {0.1, 1.0, 3.0}) {
    for (double h : {0.5, 0.25, 0.01}) {
      const StateVec x = testing::random_state();
      const auto field = [&](double, const StateVec& y) -> StateVec { return -k * y; };
      const auto jac = [&](double, const StateVec&) -> StateJacobian {
        return -k * StateJacobian::Identity();
      };
      const auto step = trapezoidal_newton(h, x, field(0.0, x), h, field, jac);
      const StateVec exact = x * (1.0 - k * h / 2.0) / (1.0 + k * h / 2.0);
      CHECK((step.y - exact).lpNorm<Eigen::Infinity>() <= 1e-12);
      CHECK(step.residual <= 1e-12);
    }
  }
}

TEST_CASE("step_trapezoidal agrees with step_euler to second order") {
  const ModelParams p;
  const StateVec x = default_initial_state();
  double prev = 0.0;
  for (double h : {0.5, 0.25, 0.125, 0.0625}) {
    const StateVec tr = step_trapezoidal(0.0, x, ControlVec::Zero(), ControlVec::Zero(), h, p);
    const StateVec eu = step_euler(0.0, x, ControlVec::Zero(), h, p);
    const double diff = (tr - eu).lpNorm<Eigen::Infinity>();
    CHECK(diff <= 0.05 * h * h);
    if (prev > 0) CHECK(prev / diff == Approx(4.0).epsilon(0.1));
    prev = diff;
  }
}

TEST_CASE("step_trapezoidal reports non-convergence") {
  const ModelParams p;
  NewtonOptions opts;
  opts.max_iterations = 0;
  CHECK_THROWS_AS(step_trapezoidal(0.0, default_initial_state(), ControlVec::Zero(),
                                   ControlVec::Zero(), 0.5, p, opts),
                  NonConvergence);
  // A blow-up field: Newton cannot make progress on NaN.
  const auto field = [](double, const StateVec& y) -> StateVec {
    return y.array().sqrt() * std::nan("");
  };
  const auto jac = [](double, const StateVec&) -> StateJacobian { return StateJacobian::Zero(); };
  CHECK_THROWS_AS(trapezoidal_newton(1.0, StateVec::Ones(), StateVec::Ones(), 1.0, field, jac),
                  NonConvergence);
}

TEST_CASE("simulate") {
  const ModelParams p;
  SUBCASE("zero state stays zero") {
    for (Scheme scheme : {Scheme::Euler, Scheme::Trapezoidal}) {
      const Grid grid = Grid::uniform(52.0, 0.5);
      const auto traj = simulate(ControlSchedule::constant(grid, scheme, ControlVec::Zero()), scheme,
                                 StateVec::Zero(), p);
      REQUIRE(traj.states.size() == 105);
      for (const auto& x : traj.states) CHECK(x == StateVec::Zero());
    }
  }
  SUBCASE("first Euler node is the hand-checked step") {
    const auto traj = uncontrolled(Scheme::Euler, 0.5);
    CHECK(traj.states[0] == default_initial_state());
    CHECK(traj.states[1] == step_euler(0.0, default_initial_state(), ControlVec::Zero(), 0.5, p));
    CHECK(traj.states[1][2] == Approx(0.009676).epsilon(1e-13));
  }
  SUBCASE("terminal x5 equals the running-cost quadrature") {
    for (Scheme scheme : {Scheme::Euler, Scheme::Trapezoidal}) {
      const Grid grid = Grid::uniform(52.0, 0.25);
      auto schedule = ControlSchedule::constant(grid, scheme, ControlVec::Zero());
      for (auto& u : schedule.values) u = testing::random_control(0.0, 0.2);
      const auto traj = simulate(schedule, scheme, default_initial_state(), p);
      const double quad = testing::cost_quadrature(traj.states, schedule.values, 0.25, scheme, p);
      CHECK(std::abs(traj.states.back()[4] - quad) <= 1e-10);
    }
  }
  SUBCASE("schedule length must match the scheme") {
    const Grid grid = Grid::uniform(52.0, 0.5);
    const auto euler_schedule = ControlSchedule::constant(grid, Scheme::Euler, ControlVec::Zero());
    CHECK(euler_schedule.values.size() == 104);
    CHECK_THROWS_AS(simulate(euler_schedule, Scheme::Trapezoidal, default_initial_state(), p),
                    std::invalid_argument);
  }
}

TEST_CASE("accumulated cost is nondecreasing") {
  const ModelParams p;
  for (Scheme scheme : {Scheme::Euler, Scheme::Trapezoidal}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Grid grid = Grid::uniform(52.0, 0.5);
      auto schedule = ControlSchedule::constant(grid, scheme, ControlVec::Zero());
      for (auto& u : schedule.values) u = testing::random_control(0.0, 0.1);
      const auto traj = simulate(schedule, scheme, default_initial_state(), p);
      const double slack = scheme == Scheme::Euler ? 0.0 : NewtonOptions{}.tolerance;
      for (std::size_t k = 1; k < traj.states.size(); ++k) {
        CHECK(traj.states[k][4] >= traj.states[k - 1][4] - slack);
      }
    }
  }
}

TEST_CASE("observed order of accuracy") {
  const StateVec reference = uncontrolled(Scheme::Trapezoidal, 1.0 / 512).states.back();
  auto error = [&](Scheme scheme, double h) {
    return (uncontrolled(scheme, h).states.back() - reference).lpNorm<Eigen::Infinity>();
  };
  for (double h : {0.5, 0.25}) {
    const double p_euler = std::log2(error(Scheme::Euler, h) / error(Scheme::Euler, h / 2));
    const double p_trap =
        std::log2(error(Scheme::Trapezoidal, h) / error(Scheme::Trapezoidal, h / 2));
    CHECK(p_euler >= 0.8);
    CHECK(p_euler <= 1.2);
    CHECK(p_trap >= 1.8);
    CHECK(p_trap <= 2.2);
  }
}

TEST_CASE("simulation is deterministic") {
  const auto a = uncontrolled(Scheme::Trapezoidal, 0.125);
  const auto b = uncontrolled(Scheme::Trapezoidal, 0.125);
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) CHECK(a.states[k] == b.states[k]);
}

TEST_CASE("pack_trajectory round trip") {
  for (Scheme scheme : {Scheme::Euler, Scheme::Trapezoidal}) {
    const auto problem =
        build(Grid::uniform(52.0, 0.5), scheme, ModelParams{}, default_initial_state());
    auto schedule = ControlSchedule::constant(problem.grid, scheme, ControlVec::Zero());
    for (auto& u : schedule.values) u = testing::random_control(0.0, 0.1);
    const auto traj = simulate(schedule, scheme, problem.x_init, problem.params);
    const auto back = unpack_trajectory(pack_trajectory(traj, problem.layout), problem);
    REQUIRE(back.states.size() == traj.states.size());
    for (std::size_t k = 0; k < traj.states.size(); ++k) CHECK(back.states[k] == traj.states[k]);
    REQUIRE(back.controls.values.size() == schedule.values.size());
    for (std::size_t k = 0; k < schedule.values.size(); ++k) {
      CHECK(back.controls.values[k] == schedule.values[k]);
    }
  }
}

TEST_CASE("trajectory csv") {
  const auto traj = uncontrolled(Scheme::Euler, 0.5);
  std::ostringstream out;
  write_trajectory_csv(out, traj);
  const std::string text = out.str();
  CHECK(text.rfind("t,x1,x2,x3,x4,x5,u1,u2\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 106);
  // Euler defines no control at the final node.
  const auto last_line_start = text.rfind('\n', text.size() - 2) + 1;
  CHECK(text.substr(text.size() - 3) == ",,\n");
  CHECK(text.compare(last_line_start, 3, "52,") == 0);

  std::istringstream in(text);
  const auto back = read_trajectory_csv(in);
  CHECK(back.grid.n_steps == 104);
  CHECK(back.grid.h == 0.5);
  REQUIRE(back.states.size() == traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k) CHECK(back.states[k] == traj.states[k]);
  CHECK(back.controls.values.size() == 104);

  std::istringstream bad("t,x1\n0,1\n");
  CHECK_THROWS(read_trajectory_csv(bad));
}

TEST_CASE("number formatting ignores the C locale") {
  const char* previous = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = previous ? previous : "C";
  for (const char* name : {"de_DE.UTF-8", "fr_FR.UTF-8"}) {
    if (std::setlocale(LC_NUMERIC, name) != nullptr) break;
  }
  CHECK(format_double(0.125) == "0.125");
  CHECK(format_double(1e-5) == "1e-05");
  CHECK(format_double(52.0) == "52");
  std::setlocale(LC_NUMERIC, saved.c_str());
}
