#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "dengue/simulate.hpp"
#include "dengue/transcription.hpp"

namespace dengue {

struct SolverOptions {
  double tol_feas = 1e-6;       ///< constraint infinity-norm
  double tol_opt = 1e-4;        ///< projected Lagrangian gradient infinity-norm
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  double feas_decrease = 0.25;  ///< required ratio of successive infeasibilities
  int max_outer = 50;
  int max_inner = 2000;
  int lbfgs_memory = 10;
  double inner_tol_init = 1e-2;  ///< first subproblem tolerance; halves each outer iteration
  /// Diagonal shift of the penalty preconditioner rho J^T J + shift I.
  double precond_shift = 0.1;
  bool verbose = false;          ///< one line per outer iteration on stderr

  /// Throws std::invalid_argument.
  void validate() const;
};

enum class SolveStatus { Converged, MaxIterations, InnerFailure };
std::string_view to_string(SolveStatus status);

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

Eigen::VectorXd project(const Eigen::VectorXd& z, const Box& box);

/// Gradient with components that point out of the box zeroed on active faces
/// (the negative of the projection of -g onto the tangent cone).
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& z, const Eigen::VectorXd& g,
                                   const Box& box);

/// Returns f(z) and writes its gradient into `grad`.
using ValueAndGradient = std::function<double(const Eigen::VectorXd& z, Eigen::VectorXd& grad)>;

enum class InnerStatus { Converged, IterationLimit, LineSearchFailure };

/// Symmetric positive definite Hessian model M used as the initial inverse
/// Hessian M^-1 of the limited-memory recursion.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  /// Rebuilds M at `z` restricted to the variables flagged in `free`.
  virtual void update(const Eigen::VectorXd& z, const std::vector<bool>& free) = 0;
  /// M^-1 q on the free variables, zero on the others.
  virtual Eigen::VectorXd solve(const Eigen::VectorXd& q) const = 0;
};

struct InnerOptions {
  double tolerance = 1e-6;
  int max_iterations = 2000;
  int memory = 10;
  Preconditioner* preconditioner = nullptr;  ///< identity scaling when null
};

struct InnerResult {
  Eigen::VectorXd z;
  double value = 0.0;
  Eigen::VectorXd gradient;
  double projected_gradient_norm = 0.0;
  int iterations = 0;
  InnerStatus status = InnerStatus::Converged;
};

/// Bound-constrained minimization by projected limited-memory BFGS with an
/// Armijo backtracking search along the projection arc.
InnerResult inner_minimize(const ValueAndGradient& fg, const Eigen::VectorXd& z_start,
                           const Box& box, const InnerOptions& opts);

/// min f(z) s.t. c(z) = 0, lower <= z <= upper.
class EqualityNlp {
 public:
  virtual ~EqualityNlp() = default;
  virtual int num_vars() const = 0;
  virtual int num_cons() const = 0;
  virtual const Box& bounds() const = 0;
  virtual double objective(const Eigen::VectorXd& z) const = 0;
  virtual Eigen::VectorXd objective_gradient(const Eigen::VectorXd& z) const = 0;
  virtual Eigen::VectorXd constraints(const Eigen::VectorXd& z) const = 0;
  virtual Eigen::VectorXd constraint_jacobian_transpose_times(const Eigen::VectorXd& z,
                                                              const Eigen::VectorXd& v) const = 0;
  /// Sparse constraint Jacobian, when available. Enables the penalty-term
  /// preconditioner of the inner solves.
  virtual std::optional<Eigen::SparseMatrix<double>> constraint_jacobian(
      const Eigen::VectorXd& /*z*/) const {
    return std::nullopt;
  }
};

/// Adapts a transcribed control problem to the solver interface.
class TranscribedNlp final : public EqualityNlp {
 public:
  explicit TranscribedNlp(const NlpProblem& problem);

  int num_vars() const override { return problem_.n_vars(); }
  int num_cons() const override { return problem_.n_cons(); }
  const Box& bounds() const override { return box_; }
  double objective(const Eigen::VectorXd& z) const override;
  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& z) const override;
  Eigen::VectorXd constraints(const Eigen::VectorXd& z) const override;
  Eigen::VectorXd constraint_jacobian_transpose_times(const Eigen::VectorXd& z,
                                                      const Eigen::VectorXd& v) const override;
  std::optional<Eigen::SparseMatrix<double>> constraint_jacobian(
      const Eigen::VectorXd& z) const override;

 private:
  const NlpProblem& problem_;
  Box box_;
};

struct KktResiduals {
  double feasibility = 0.0;   ///< ||c(z)||_inf
  double stationarity = 0.0;  ///< ||P(grad f + J^T lambda)||_inf
};

KktResiduals kkt_residuals(const EqualityNlp& nlp, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& multipliers);
KktResiduals kkt_residuals(const Eigen::VectorXd& z, const Eigen::VectorXd& multipliers,
                           const NlpProblem& problem);

struct NlpSolution {
  SolveStatus status = SolveStatus::MaxIterations;
  Eigen::VectorXd z;
  Eigen::VectorXd multipliers;
  double objective = 0.0;
  KktResiduals residuals;
  int outer_iters = 0;
  int inner_iters_total = 0;
  double penalty = 0.0;
  std::string note;
};

/// Augmented Lagrangian method with multipliers for L = f + lambda^T c.
NlpSolution solve_nlp(const EqualityNlp& nlp, const Eigen::VectorXd& z0,
                      const SolverOptions& opts = {});

struct SolveReport {
  SolveStatus status = SolveStatus::MaxIterations;
  double objective = 0.0;
  int outer_iters = 0;
  int inner_iters_total = 0;
  double feas_inf_norm = 0.0;
  double kkt_inf_norm = 0.0;
  double wall_time = 0.0;  ///< seconds, solve only
  double penalty = 0.0;
  std::string note;
  Eigen::VectorXd solution;
  Eigen::VectorXd multipliers;
  Trajectory trajectory;
};

/// Zero-control simulation (controls clamped into their bounds), packed.
Eigen::VectorXd initial_guess(const NlpProblem& problem);

SolveReport solve(const NlpProblem& problem, const Eigen::VectorXd& z0,
                  const SolverOptions& opts = {});

}  // namespace dengue
