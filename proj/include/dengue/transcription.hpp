#pragma once

#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "dengue/model.hpp"

namespace dengue {

enum class Scheme { Euler, Trapezoidal };

std::string_view to_string(Scheme scheme);
/// Accepts "euler" or "trapezoidal" (case-insensitive); throws std::invalid_argument.
Scheme parse_scheme(std::string_view text);

/// Uniform time mesh on [0, t_final].
struct Grid {
  double t0 = 0.0;
  double t_final = 0.0;
  double h = 0.0;
  int n_steps = 0;

  /// Throws std::invalid_argument unless t_final is an integer multiple of h
  /// to within 1e-12 relative.
  static Grid uniform(double t_final, double h);

  double time(int node) const { return t0 + node * h; }
};

/// Box on every control node. Defaults to u >= 0 with no upper limit.
struct ControlBounds {
  ControlVec lower = ControlVec::Zero();
  ControlVec upper = ControlVec::Constant(std::numeric_limits<double>::infinity());
};

/// Position of every state and control node in the flat decision vector.
///
/// States live at nodes 1..N (node 0 is the fixed initial condition). The
/// vector is a sequence of 7-wide blocks, one per state node k, holding
/// x(k) followed by one control:
///   Euler:        [x1 u0 | x2 u1 | ... | xN u(N-1)]
///   Trapezoidal:  [u0 | x1 u1 | x2 u2 | ... | xN uN]
struct Layout {
  static constexpr int kBlock = kStateDim + kControlDim;

  Scheme scheme = Scheme::Euler;
  int n_steps = 0;

  /// Controls stored ahead of the first block (u0 for the trapezoidal rule).
  int leading_controls() const { return scheme == Scheme::Trapezoidal ? kControlDim : 0; }
  int n_control_nodes() const { return scheme == Scheme::Trapezoidal ? n_steps + 1 : n_steps; }
  int size() const { return leading_controls() + kBlock * n_steps; }

  /// Offset of x(node), node in 1..N.
  int state_offset(int node) const { return leading_controls() + kBlock * (node - 1); }
  /// Offset of u(node), node in 0..n_control_nodes()-1.
  int control_offset(int node) const {
    if (scheme == Scheme::Trapezoidal) {
      return node == 0 ? 0 : state_offset(node) + kStateDim;
    }
    return state_offset(node + 1) + kStateDim;
  }
};

/// Finite-dimensional transcription of the control problem: minimize x5(t_f)
/// subject to one 5-vector defect per mesh interval.
struct NlpProblem {
  Grid grid;
  Scheme scheme = Scheme::Euler;
  ModelParams params;
  StateVec x_init = StateVec::Zero();
  ControlBounds control_bounds;
  Layout layout;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int n_vars() const { return layout.size(); }
  int n_cons() const { return kStateDim * grid.n_steps; }
};

NlpProblem build(const Grid& grid, Scheme scheme, const ModelParams& params,
                 const StateVec& x_init, const ControlBounds& control_bounds = {});

/// `states` are nodes 1..N; `controls` follow Layout::n_control_nodes().
Eigen::VectorXd pack(std::span<const StateVec> states, std::span<const ControlVec> controls,
                     const Layout& layout);

struct NodeValues {
  std::vector<StateVec> states;      ///< nodes 1..N
  std::vector<ControlVec> controls;  ///< per Layout::n_control_nodes()
};

NodeValues unpack(const Eigen::VectorXd& z, const Layout& layout);

/// Residuals c_n = x(n+1) - x(n) - increment, stacked per interval.
Eigen::VectorXd defects(const Eigen::VectorXd& z, const NlpProblem& problem);

/// Sparse Jacobian of defects() with a value-independent pattern (entries
/// that happen to be zero are stored explicitly).
Eigen::SparseMatrix<double> defect_jacobian(const Eigen::VectorXd& z, const NlpProblem& problem);

/// J(z)^T v without forming J.
Eigen::VectorXd defect_jacobian_transpose_times(const Eigen::VectorXd& z,
                                                const NlpProblem& problem,
                                                const Eigen::VectorXd& v);

/// Structural nonzero count of defect_jacobian():
///   Euler        10N + 12(N-1)
///   Trapezoidal  22N + 12(N-1)
long structural_nonzeros(const NlpProblem& problem);

double objective(const Eigen::VectorXd& z, const NlpProblem& problem);
Eigen::VectorXd objective_gradient(const Eigen::VectorXd& z, const NlpProblem& problem);

}  // namespace dengue
