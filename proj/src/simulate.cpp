#include "dengue/simulate.hpp"

#include <string>

namespace dengue {

namespace {

int expected_controls(const Grid& grid, Scheme scheme) {
  return scheme == Scheme::Trapezoidal ? grid.n_steps + 1 : grid.n_steps;
}

}  // namespace

ControlSchedule ControlSchedule::constant(const Grid& grid, Scheme scheme, const ControlVec& u) {
  return ControlSchedule{grid, std::vector<ControlVec>(expected_controls(grid, scheme), u)};
}

StateVec step_euler(double t, const StateVec& x, const ControlVec& u, double h,
                    const ModelParams& params) {
  return x + h * dynamics(t, x, u, params);
}

StateVec step_trapezoidal(double t, const StateVec& x, const ControlVec& u_now,
                          const ControlVec& u_next, double h, const ModelParams& params,
                          const NewtonOptions& opts) {
  const StateVec f_now = dynamics(t, x, u_now, params);
  return trapezoidal_newton(
             t + h, x, f_now, h,
             [&](double s, const StateVec& y) { return dynamics(s, y, u_next, params); },
             [&](double s, const StateVec& y) { return jacobian_x(s, y, u_next, params); }, opts)
      .y;
}

Trajectory simulate(const ControlSchedule& schedule, Scheme scheme, const StateVec& x_init,
                    const ModelParams& params, const NewtonOptions& opts) {
  const Grid& grid = schedule.grid;
  if (static_cast<int>(schedule.values.size()) != expected_controls(grid, scheme)) {
    throw std::invalid_argument("control schedule has " + std::to_string(schedule.values.size()) +
                                " nodes; " + std::string(to_string(scheme)) + " needs " +
                                std::to_string(expected_controls(grid, scheme)));
  }
  if (x_init[4] != 0.0) throw std::invalid_argument("initial accumulated cost x5 must be 0");

  Trajectory traj{grid, {}, schedule};
  traj.states.reserve(grid.n_steps + 1);
  traj.states.push_back(x_init);
  for (int n = 0; n < grid.n_steps; ++n) {
    const StateVec& x = traj.states.back();
    const double t = grid.time(n);
    if (scheme == Scheme::Euler) {
      traj.states.push_back(step_euler(t, x, schedule.values[n], grid.h, params));
    } else {
      traj.states.push_back(step_trapezoidal(t, x, schedule.values[n], schedule.values[n + 1],
                                             grid.h, params, opts));
    }
  }
  return traj;
}

Eigen::VectorXd pack_trajectory(const Trajectory& trajectory, const Layout& layout) {
  return pack(std::span<const StateVec>(trajectory.states).subspan(1),
              trajectory.controls.values, layout);
}

Trajectory unpack_trajectory(const Eigen::VectorXd& z, const NlpProblem& problem) {
  auto nodes = unpack(z, problem.layout);
  Trajectory traj;
  traj.grid = problem.grid;
  traj.states.reserve(nodes.states.size() + 1);
  traj.states.push_back(problem.x_init);
  traj.states.insert(traj.states.end(), nodes.states.begin(), nodes.states.end());
  traj.controls = ControlSchedule{problem.grid, std::move(nodes.controls)};
  return traj;
}

}  // namespace dengue
