#include "dengue/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dengue {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("invalid model parameters: ") + what);
}

}  // namespace

void ModelParams::validate() const {
  const double all[] = {alpha_r, alpha_m, beta, eta, mu, rho, theta,
                        tau, phi, omega, p_total, gamma_d, gamma_f, gamma_e};
  for (double v : all) require(std::isfinite(v), "all parameters must be finite");
  require(alpha_r >= 0 && alpha_m >= 0 && beta >= 0 && eta >= 0 && rho >= 0 &&
              theta >= 0 && tau >= 0,
          "rates must be non-negative");
  require(mu >= 0 && mu <= 1, "mu must lie in [0, 1]");
  require(p_total > 0, "p_total must be positive");
  require(gamma_d >= 0 && gamma_f >= 0 && gamma_e >= 0,
          "cost weights must be non-negative");
}

StateVec default_initial_state() {
  StateVec x;
  x << 1.0, 0.12, 0.004, 0.05, 0.0;
  return x;
}

double seasonal_growth(double t, double x4, const ModelParams& p) {
  return p.alpha_r * (1.0 - p.mu * std::sin(p.omega * t + p.phi)) - p.alpha_m - x4;
}

StateVec dynamics(double t, const StateVec& x, const ControlVec& u,
                  const ModelParams& p) {
  const double g = seasonal_growth(t, x[3], p);
  StateVec f;
  f[0] = g * x[0] - u[0];
  f[1] = g * x[1] + p.beta * (x[0] - x[1]) * x[2] - u[0];
  f[2] = -p.eta * x[2] + p.rho * x[1] * (p.p_total - x[2]);
  f[3] = -p.tau * x[3] + p.theta * x[2] + u[1];
  f[4] = cost_integrand(x, u, p);
  return f;
}

double cost_integrand(const StateVec& x, const ControlVec& u, const ModelParams& p) {
  return p.gamma_d * x[2] * x[2] + p.gamma_f * u[0] * u[0] + p.gamma_e * u[1] * u[1];
}

StateJacobian jacobian_x(double t, const StateVec& x, const ControlVec& /*u*/,
                         const ModelParams& p) {
  const double g = seasonal_growth(t, x[3], p);
  StateJacobian J = StateJacobian::Zero();
  J(0, 0) = g;
  J(0, 3) = -x[0];

  J(1, 0) = p.beta * x[2];
  J(1, 1) = g - p.beta * x[2];
  J(1, 2) = p.beta * (x[0] - x[1]);
  J(1, 3) = -x[1];

  J(2, 1) = p.rho * (p.p_total - x[2]);
  J(2, 2) = -p.eta - p.rho * x[1];

  J(3, 2) = p.theta;
  J(3, 3) = -p.tau;

  J(4, 2) = 2.0 * p.gamma_d * x[2];
  return J;
}

ControlJacobian jacobian_u(double /*t*/, const StateVec& /*x*/, const ControlVec& u,
                           const ModelParams& p) {
  ControlJacobian J = ControlJacobian::Zero();
  J(0, 0) = -1.0;
  J(1, 0) = -1.0;
  J(3, 1) = 1.0;
  J(4, 0) = 2.0 * p.gamma_f * u[0];
  J(4, 1) = 2.0 * p.gamma_e * u[1];
  return J;
}

}  // namespace dengue
