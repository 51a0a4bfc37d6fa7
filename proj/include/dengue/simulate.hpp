#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "dengue/model.hpp"
#include "dengue/transcription.hpp"

namespace dengue {

/// Raised when an implicit step fails to reach its residual tolerance.
class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NewtonOptions {
  double tolerance = 1e-12;  ///< residual infinity-norm
  int max_iterations = 25;
};

/// Control values per node. Euler defines nodes 0..N-1, the trapezoidal rule 0..N.
struct ControlSchedule {
  Grid grid;
  std::vector<ControlVec> values;

  static ControlSchedule constant(const Grid& grid, Scheme scheme, const ControlVec& u);
};

struct Trajectory {
  Grid grid;
  std::vector<StateVec> states;  ///< nodes 0..N
  ControlSchedule controls;
};

StateVec step_euler(double t, const StateVec& x, const ControlVec& u, double h,
                    const ModelParams& params);

struct ImplicitStep {
  StateVec y;
  int iterations = 0;
  double residual = 0.0;
};

/// Solves y = x + (h/2) [f_now + field(t_next, y)] by damped Newton, starting
/// from the explicit predictor x + h f_now. `field(t, y)` returns f and
/// `jacobian(t, y)` returns df/dy.
template <typename Field, typename Jacobian>
ImplicitStep trapezoidal_newton(double t_next, const StateVec& x, const StateVec& f_now,
                                double h, Field&& field, Jacobian&& jacobian,
                                const NewtonOptions& opts = {}) {
  const StateVec base = x + 0.5 * h * f_now;
  auto residual_of = [&](const StateVec& y) -> StateVec {
    return y - base - 0.5 * h * field(t_next, y);
  };

  ImplicitStep step;
  step.y = x + h * f_now;
  StateVec r = residual_of(step.y);
  double norm = r.lpNorm<Eigen::Infinity>();
  while (!(norm <= opts.tolerance)) {
    if (step.iterations >= opts.max_iterations || !std::isfinite(norm)) {
      throw NonConvergence("trapezoidal step did not converge: residual " +
                           std::to_string(norm) + " after " +
                           std::to_string(step.iterations) + " Newton iterations");
    }
    const StateJacobian M = StateJacobian::Identity() - 0.5 * h * jacobian(t_next, step.y);
    const StateVec dy = -M.partialPivLu().solve(r);

    double alpha = 1.0;
    StateVec trial = step.y + dy;
    StateVec r_trial = residual_of(trial);
    double trial_norm = r_trial.lpNorm<Eigen::Infinity>();
    for (int halvings = 0; !(trial_norm < norm) && halvings < 30; ++halvings) {
      alpha *= 0.5;
      trial = step.y + alpha * dy;
      r_trial = residual_of(trial);
      trial_norm = r_trial.lpNorm<Eigen::Infinity>();
    }
    if (!(trial_norm < norm)) {
      throw NonConvergence("trapezoidal step stalled at residual " + std::to_string(norm));
    }
    step.y = trial;
    r = r_trial;
    norm = trial_norm;
    ++step.iterations;
  }
  step.residual = norm;
  return step;
}

StateVec step_trapezoidal(double t, const StateVec& x, const ControlVec& u_now,
                          const ControlVec& u_next, double h, const ModelParams& params,
                          const NewtonOptions& opts = {});

/// Integrates from x_init (x5 must be 0) node by node with the given scheme.
Trajectory simulate(const ControlSchedule& schedule, Scheme scheme, const StateVec& x_init,
                    const ModelParams& params, const NewtonOptions& opts = {});

/// Decision vector for `layout` holding the trajectory's nodes 1..N and controls.
Eigen::VectorXd pack_trajectory(const Trajectory& trajectory, const Layout& layout);

/// Inverse of pack_trajectory, with node 0 taken from the problem.
Trajectory unpack_trajectory(const Eigen::VectorXd& z, const NlpProblem& problem);

}  // namespace dengue
