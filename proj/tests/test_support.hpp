#pragma once

// Independent oracles shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "dengue/model.hpp"
#include "dengue/transcription.hpp"

namespace dengue::testing {

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20090101);
  return gen;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline StateVec random_state(double lo = -2.0, double hi = 2.0) {
  StateVec x;
  for (int i = 0; i < kStateDim; ++i) x[i] = uniform(lo, hi);
  return x;
}

inline ControlVec random_control(double lo = 0.0, double hi = 2.0) {
  return {uniform(lo, hi), uniform(lo, hi)};
}

/// Central differences of `f` at `x` with step `step` per coordinate.
inline Eigen::MatrixXd central_difference(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double step) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd plus = x, minus = x;
    plus[j] += step;
    minus[j] -= step;
    J.col(j) = (f(plus) - f(minus)) / (2.0 * step);
  }
  return J;
}

/// Largest entrywise |a - b| / max(1, |a|).
inline double max_relative_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& fd) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
    for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
      const double err = std::abs(analytic(i, j) - fd(i, j)) / std::max(1.0, std::abs(analytic(i, j)));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

/// Random decision vector: states in [-2, 2], controls in [0, 2].
inline Eigen::VectorXd random_decision(const NlpProblem& problem) {
  Eigen::VectorXd z(problem.n_vars());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = uniform(-2.0, 2.0);
  for (int k = 0; k < problem.layout.n_control_nodes(); ++k) {
    z.segment<kControlDim>(problem.layout.control_offset(k)) = random_control();
  }
  return z;
}

/// Running-cost quadrature matching the scheme: left rectangle for Euler,
/// trapezoid for the trapezoidal rule.
inline double cost_quadrature(const std::vector<StateVec>& states,
                              const std::vector<ControlVec>& controls, double h, Scheme scheme,
                              const ModelParams& params) {
  auto L = [&](std::size_t k) {
    const StateVec& x = states[k];
    const ControlVec& u = controls[k];
    return params.gamma_d * x[2] * x[2] + params.gamma_f * u[0] * u[0] +
           params.gamma_e * u[1] * u[1];
  };
  double sum = 0.0;
  for (std::size_t n = 0; n + 1 < states.size(); ++n) {
    sum += scheme == Scheme::Euler ? h * L(n) : 0.5 * h * (L(n) + L(n + 1));
  }
  return sum;
}

}  // namespace dengue::testing
