#pragma once

#include <numbers>

#include <Eigen/Core>

namespace dengue {

/// Augmented state: mosquito density, virus-carrying mosquito density,
/// infected persons, goodwill, accumulated cost.
using StateVec = Eigen::Matrix<double, 5, 1>;
/// Insecticide and education investment rates.
using ControlVec = Eigen::Matrix<double, 2, 1>;
using StateJacobian = Eigen::Matrix<double, 5, 5>;
using ControlJacobian = Eigen::Matrix<double, 5, 2>;

inline constexpr int kStateDim = 5;
inline constexpr int kControlDim = 2;

/// Epidemic and cost parameters in normalized weekly units. Defaults are the
/// reference parameter set used by every benchmark in this project.
struct ModelParams {
  double alpha_r = 0.20;  ///< mosquito reproduction rate
  double alpha_m = 0.18;  ///< mosquito mortality rate
  double beta = 0.3;      ///< contact rate, non-carrier mosquitoes x infected persons
  double eta = 0.15;      ///< treatment rate
  double mu = 0.1;        ///< amplitude of the seasonal oscillation
  double rho = 0.1;       ///< infection rate of persons
  double theta = 0.05;    ///< fear factor feeding goodwill
  double tau = 0.1;       ///< goodwill forgetting rate
  double phi = 0.0;       ///< seasonal phase
  double omega = 2.0 * std::numbers::pi / 52.0;  ///< one cycle per 52 weeks
  double p_total = 1.0;   ///< population in the risk area
  double gamma_d = 1.0;   ///< cost of infected persons
  double gamma_f = 0.4;   ///< cost of insecticide
  double gamma_e = 0.8;   ///< cost of education

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
};

/// Initial condition of the reference problem; x5 starts at zero.
StateVec default_initial_state();

/// Net per-capita mosquito growth rate including seasonality and goodwill.
double seasonal_growth(double t, double x4, const ModelParams& params);

/// Time derivative of the augmented state. The fifth row is the running cost.
StateVec dynamics(double t, const StateVec& x, const ControlVec& u,
                  const ModelParams& params);

double cost_integrand(const StateVec& x, const ControlVec& u,
                      const ModelParams& params);

/// d(dynamics)/dx, closed form.
StateJacobian jacobian_x(double t, const StateVec& x, const ControlVec& u,
                         const ModelParams& params);

/// d(dynamics)/du, closed form.
ControlJacobian jacobian_u(double t, const StateVec& x, const ControlVec& u,
                           const ModelParams& params);

}  // namespace dengue
