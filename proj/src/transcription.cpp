#include "dengue/transcription.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dengue {

namespace {

// Structural pattern of I + df/dx and of df/du.
constexpr bool kStatePattern[kStateDim][kStateDim] = {
    {true, false, false, true, false},
    {true, true, true, true, false},
    {false, true, true, false, false},
    {false, false, true, true, false},
    {false, false, true, false, true},
};
constexpr bool kControlPattern[kStateDim][kControlDim] = {
    {true, false}, {true, false}, {false, false}, {false, true}, {true, true},
};

void check_size(const Eigen::VectorXd& z, const NlpProblem& problem) {
  if (z.size() != problem.n_vars()) {
    throw std::invalid_argument("decision vector has length " + std::to_string(z.size()) +
                                ", expected " + std::to_string(problem.n_vars()));
  }
}

StateVec state_at(const Eigen::VectorXd& z, const NlpProblem& problem, int node) {
  if (node == 0) return problem.x_init;
  return z.segment<kStateDim>(problem.layout.state_offset(node));
}

ControlVec control_at(const Eigen::VectorXd& z, const Layout& layout, int node) {
  return z.segment<kControlDim>(layout.control_offset(node));
}

// Weight on f at the left and right end of an interval.
struct Weights {
  double left;
  double right;
};

Weights weights(const NlpProblem& problem) {
  const double h = problem.grid.h;
  if (problem.scheme == Scheme::Euler) return {h, 0.0};
  return {0.5 * h, 0.5 * h};
}

template <typename Matrix>
void add_block(std::vector<Eigen::Triplet<double>>& triplets, int row, int col,
               const Matrix& block, const auto& pattern) {
  for (int i = 0; i < block.rows(); ++i) {
    for (int j = 0; j < block.cols(); ++j) {
      if (pattern[i][j]) triplets.emplace_back(row + i, col + j, block(i, j));
    }
  }
}

}  // namespace

std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::Euler ? "euler" : "trapezoidal";
}

Scheme parse_scheme(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "euler") return Scheme::Euler;
  if (lower == "trapezoidal") return Scheme::Trapezoidal;
  throw std::invalid_argument("unknown scheme '" + std::string(text) +
                              "' (expected euler or trapezoidal)");
}

Grid Grid::uniform(double t_final, double h) {
  if (!(std::isfinite(t_final) && t_final > 0)) {
    throw std::invalid_argument("t_final must be positive and finite");
  }
  if (!(std::isfinite(h) && h > 0)) throw std::invalid_argument("step h must be positive");
  const double steps = std::round(t_final / h);
  if (steps < 1 || std::abs(steps * h - t_final) > 1e-12 * t_final) {
    throw std::invalid_argument("t_final = " + std::to_string(t_final) +
                                " is not an integer multiple of h = " + std::to_string(h));
  }
  Grid grid;
  grid.t_final = t_final;
  grid.h = h;
  grid.n_steps = static_cast<int>(steps);
  return grid;
}

NlpProblem build(const Grid& grid, Scheme scheme, const ModelParams& params,
                 const StateVec& x_init, const ControlBounds& control_bounds) {
  if (grid.n_steps < 1 || !(grid.h > 0)) throw std::invalid_argument("invalid grid");
  if (std::abs(grid.n_steps * grid.h - grid.t_final) > 1e-12 * grid.t_final) {
    throw std::invalid_argument("grid does not cover [0, t_final] uniformly");
  }
  if (x_init[4] != 0.0) throw std::invalid_argument("initial accumulated cost x5 must be 0");
  if (!x_init.allFinite()) throw std::invalid_argument("initial state must be finite");
  if ((control_bounds.lower.array() > control_bounds.upper.array()).any()) {
    throw std::invalid_argument("control lower bound exceeds upper bound");
  }
  params.validate();

  NlpProblem problem;
  problem.grid = grid;
  problem.scheme = scheme;
  problem.params = params;
  problem.x_init = x_init;
  problem.control_bounds = control_bounds;
  problem.layout = Layout{scheme, grid.n_steps};

  const int n = problem.n_vars();
  const double inf = std::numeric_limits<double>::infinity();
  problem.lower = Eigen::VectorXd::Constant(n, -inf);
  problem.upper = Eigen::VectorXd::Constant(n, inf);
  for (int k = 0; k < problem.layout.n_control_nodes(); ++k) {
    const int off = problem.layout.control_offset(k);
    problem.lower.segment<kControlDim>(off) = control_bounds.lower;
    problem.upper.segment<kControlDim>(off) = control_bounds.upper;
  }
  return problem;
}

Eigen::VectorXd pack(std::span<const StateVec> states, std::span<const ControlVec> controls,
                     const Layout& layout) {
  if (static_cast<int>(states.size()) != layout.n_steps ||
      static_cast<int>(controls.size()) != layout.n_control_nodes()) {
    throw std::invalid_argument("pack: expected " + std::to_string(layout.n_steps) +
                                " states and " + std::to_string(layout.n_control_nodes()) +
                                " controls, got " + std::to_string(states.size()) + " and " +
                                std::to_string(controls.size()));
  }
  Eigen::VectorXd z(layout.size());
  for (int k = 1; k <= layout.n_steps; ++k) {
    z.segment<kStateDim>(layout.state_offset(k)) = states[k - 1];
  }
  for (int k = 0; k < layout.n_control_nodes(); ++k) {
    z.segment<kControlDim>(layout.control_offset(k)) = controls[k];
  }
  return z;
}

NodeValues unpack(const Eigen::VectorXd& z, const Layout& layout) {
  if (z.size() != layout.size()) {
    throw std::invalid_argument("unpack: decision vector has length " +
                                std::to_string(z.size()) + ", expected " +
                                std::to_string(layout.size()));
  }
  NodeValues out;
  out.states.reserve(layout.n_steps);
  out.controls.reserve(layout.n_control_nodes());
  for (int k = 1; k <= layout.n_steps; ++k) {
    out.states.emplace_back(z.segment<kStateDim>(layout.state_offset(k)));
  }
  for (int k = 0; k < layout.n_control_nodes(); ++k) {
    out.controls.emplace_back(z.segment<kControlDim>(layout.control_offset(k)));
  }
  return out;
}

Eigen::VectorXd defects(const Eigen::VectorXd& z, const NlpProblem& problem) {
  check_size(z, problem);
  const auto& layout = problem.layout;
  const auto& grid = problem.grid;
  const auto [wl, wr] = weights(problem);
  const int N = grid.n_steps;

  Eigen::VectorXd c(problem.n_cons());
  StateVec x_left = problem.x_init;
  StateVec f_left = dynamics(grid.time(0), x_left, control_at(z, layout, 0), problem.params);
  for (int n = 0; n < N; ++n) {
    const StateVec x_right = state_at(z, problem, n + 1);
    StateVec increment = wl * f_left;
    StateVec f_right;
    if (problem.scheme == Scheme::Trapezoidal) {
      f_right = dynamics(grid.time(n + 1), x_right, control_at(z, layout, n + 1), problem.params);
      increment += wr * f_right;
    } else if (n + 1 < N) {
      f_right = dynamics(grid.time(n + 1), x_right, control_at(z, layout, n + 1), problem.params);
    }
    c.segment<kStateDim>(kStateDim * n) = x_right - x_left - increment;
    x_left = x_right;
    f_left = f_right;
  }
  return c;
}

Eigen::SparseMatrix<double> defect_jacobian(const Eigen::VectorXd& z, const NlpProblem& problem) {
  check_size(z, problem);
  const auto& layout = problem.layout;
  const auto& grid = problem.grid;
  const auto& params = problem.params;
  const auto [wl, wr] = weights(problem);
  const int N = grid.n_steps;
  const StateJacobian I = StateJacobian::Identity();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(structural_nonzeros(problem));
  for (int n = 0; n < N; ++n) {
    const int row = kStateDim * n;
    const double t_left = grid.time(n);
    const StateVec x_left = state_at(z, problem, n);
    const ControlVec u_left = control_at(z, layout, n);
    if (n > 0) {
      const StateJacobian block = -I - wl * jacobian_x(t_left, x_left, u_left, params);
      add_block(triplets, row, layout.state_offset(n), block, kStatePattern);
    }
    add_block(triplets, row, layout.control_offset(n),
              ControlJacobian(-wl * jacobian_u(t_left, x_left, u_left, params)), kControlPattern);

    const StateVec x_right = state_at(z, problem, n + 1);
    if (problem.scheme == Scheme::Euler) {
      for (int i = 0; i < kStateDim; ++i) {
        triplets.emplace_back(row + i, layout.state_offset(n + 1) + i, 1.0);
      }
    } else {
      const double t_right = grid.time(n + 1);
      const ControlVec u_right = control_at(z, layout, n + 1);
      const StateJacobian block = I - wr * jacobian_x(t_right, x_right, u_right, params);
      add_block(triplets, row, layout.state_offset(n + 1), block, kStatePattern);
      add_block(triplets, row, layout.control_offset(n + 1),
                ControlJacobian(-wr * jacobian_u(t_right, x_right, u_right, params)),
                kControlPattern);
    }
  }
  Eigen::SparseMatrix<double> J(problem.n_cons(), problem.n_vars());
  J.setFromTriplets(triplets.begin(), triplets.end());
  return J;
}

Eigen::VectorXd defect_jacobian_transpose_times(const Eigen::VectorXd& z,
                                                const NlpProblem& problem,
                                                const Eigen::VectorXd& v) {
  check_size(z, problem);
  if (v.size() != problem.n_cons()) {
    throw std::invalid_argument("multiplier vector length does not match constraint count");
  }
  const auto& layout = problem.layout;
  const auto& grid = problem.grid;
  const auto& params = problem.params;
  const auto [wl, wr] = weights(problem);
  const int N = grid.n_steps;

  Eigen::VectorXd out = Eigen::VectorXd::Zero(problem.n_vars());
  // Node k couples to interval k-1 (as right end) and interval k (as left end).
  for (int k = 0; k <= N; ++k) {
    const bool has_control = k < layout.n_control_nodes();
    if (k == 0 || has_control) {
      const double t = grid.time(k);
      const StateVec x = state_at(z, problem, k);
      const ControlVec u = has_control ? control_at(z, layout, k) : ControlVec::Zero();
      StateVec weighted = StateVec::Zero();  // sum of w * v over adjacent intervals
      if (k < N) weighted += wl * v.segment<kStateDim>(kStateDim * k);
      if (k > 0 && wr != 0.0) weighted += wr * v.segment<kStateDim>(kStateDim * (k - 1));
      if (k > 0) {
        const int off = layout.state_offset(k);
        auto xs = out.segment<kStateDim>(off);
        xs -= jacobian_x(t, x, u, params).transpose() * weighted;
        if (k < N) xs -= v.segment<kStateDim>(kStateDim * k);
        xs += v.segment<kStateDim>(kStateDim * (k - 1));
      }
      if (has_control) {
        out.segment<kControlDim>(layout.control_offset(k)) -=
            jacobian_u(t, x, u, params).transpose() * weighted;
      }
    } else {
      // Euler final node: only the identity block of the last interval.
      out.segment<kStateDim>(layout.state_offset(k)) += v.segment<kStateDim>(kStateDim * (k - 1));
    }
  }
  return out;
}

long structural_nonzeros(const NlpProblem& problem) {
  const long N = problem.grid.n_steps;
  if (problem.scheme == Scheme::Euler) return 10 * N + 12 * (N - 1);
  return 22 * N + 12 * (N - 1);
}

double objective(const Eigen::VectorXd& z, const NlpProblem& problem) {
  check_size(z, problem);
  return z[problem.layout.state_offset(problem.grid.n_steps) + 4];
}

Eigen::VectorXd objective_gradient(const Eigen::VectorXd& z, const NlpProblem& problem) {
  check_size(z, problem);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(problem.n_vars());
  g[problem.layout.state_offset(problem.grid.n_steps) + 4] = 1.0;
  return g;
}

}  // namespace dengue
