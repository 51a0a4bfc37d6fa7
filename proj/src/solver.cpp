#include "dengue/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <iostream>
#include <limits>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace dengue {

void SolverOptions::validate() const {
  if (!(tol_feas > 0 && tol_opt > 0 && inner_tol_init > 0)) {
    throw std::invalid_argument("solver tolerances must be positive");
  }
  if (!(precond_shift > 0)) throw std::invalid_argument("precond_shift must be positive");
  if (!(penalty_init > 0)) throw std::invalid_argument("penalty_init must be positive");
  if (!(penalty_growth > 1)) throw std::invalid_argument("penalty_growth must exceed 1");
  if (!(feas_decrease > 0 && feas_decrease < 1)) {
    throw std::invalid_argument("feas_decrease must lie in (0, 1)");
  }
  if (max_outer < 1 || max_inner < 1 || lbfgs_memory < 1) {
    throw std::invalid_argument("iteration limits and memory must be at least 1");
  }
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::InnerFailure: return "InnerFailure";
  }
  return "Unknown";
}

Eigen::VectorXd project(const Eigen::VectorXd& z, const Box& box) {
  return z.cwiseMax(box.lower).cwiseMin(box.upper);
}

Eigen::VectorXd projected_gradient(const Eigen::VectorXd& z, const Eigen::VectorXd& g,
                                   const Box& box) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z[i] <= box.lower[i] && g[i] > 0) pg[i] = 0.0;
    if (z[i] >= box.upper[i] && g[i] < 0) pg[i] = 0.0;
  }
  return pg;
}

namespace {

struct CurvaturePair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;  // 1 / s^T y
};

// Two-loop recursion: returns H * q for the implicit inverse-Hessian estimate.
Eigen::VectorXd apply_inverse_hessian(const std::deque<CurvaturePair>& memory,
                                      const Preconditioner* preconditioner, Eigen::VectorXd q) {
  std::vector<double> alpha(memory.size());
  for (std::size_t i = memory.size(); i-- > 0;) {
    alpha[i] = memory[i].rho * memory[i].s.dot(q);
    q -= alpha[i] * memory[i].y;
  }
  if (preconditioner != nullptr) {
    q = preconditioner->solve(q);
  } else if (!memory.empty()) {
    const auto& last = memory.back();
    q *= 1.0 / (last.rho * last.y.squaredNorm());
  }
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const double beta = memory[i].rho * memory[i].y.dot(q);
    q += (alpha[i] - beta) * memory[i].s;
  }
  return q;
}

// M = rho J^T J + shift I on the free variables, identity on the rest. The
// sparsity pattern of J is fixed, so the symbolic factorization is reused.
class PenaltyPreconditioner final : public Preconditioner {
 public:
  PenaltyPreconditioner(const EqualityNlp& nlp, double penalty, double shift)
      : nlp_(nlp), penalty_(penalty), shift_(shift) {}

  void update(const Eigen::VectorXd& z, const std::vector<bool>& free) override {
    const auto J = nlp_.constraint_jacobian(z);
    const Eigen::Index n = z.size();
    Eigen::SparseMatrix<double> identity(n, n);
    identity.setIdentity();
    Eigen::SparseMatrix<double> M =
        Eigen::SparseMatrix<double>(penalty_ * (J->transpose() * *J)) + shift_ * identity;
    for (Eigen::Index k = 0; k < M.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(M, k); it; ++it) {
        if (!free[it.row()] || !free[it.col()]) it.valueRef() = it.row() == it.col() ? 1.0 : 0.0;
      }
    }
    if (M.nonZeros() != pattern_nonzeros_) {
      ldlt_.analyzePattern(M);
      pattern_nonzeros_ = M.nonZeros();
    }
    ldlt_.factorize(M);
    free_ = free;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& q) const override {
    Eigen::VectorXd r = q;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (!free_[i]) r[i] = 0.0;
    }
    r = ldlt_.solve(r);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (!free_[i]) r[i] = 0.0;
    }
    return r;
  }

 private:
  const EqualityNlp& nlp_;
  double penalty_;
  double shift_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  Eigen::Index pattern_nonzeros_ = -1;
  std::vector<bool> free_;
};

}  // namespace

InnerResult inner_minimize(const ValueAndGradient& fg, const Eigen::VectorXd& z_start,
                           const Box& box, const InnerOptions& opts) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 60;

  InnerResult res;
  res.z = project(z_start, box);
  res.gradient.resize(res.z.size());
  res.value = fg(res.z, res.gradient);

  std::deque<CurvaturePair> memory;
  Eigen::VectorXd grad_trial(res.z.size());
  while (true) {
    const Eigen::VectorXd pg = projected_gradient(res.z, res.gradient, box);
    res.projected_gradient_norm = pg.lpNorm<Eigen::Infinity>();
    if (res.projected_gradient_norm <= opts.tolerance) {
      res.status = InnerStatus::Converged;
      return res;
    }
    if (res.iterations >= opts.max_iterations) {
      res.status = InnerStatus::IterationLimit;
      return res;
    }

    // Quasi-Newton step restricted to the variables not held by a bound.
    std::vector<bool> free(res.z.size());
    for (Eigen::Index i = 0; i < res.z.size(); ++i) {
      free[i] = !(pg[i] == 0.0 && (res.z[i] <= box.lower[i] || res.z[i] >= box.upper[i]));
    }
    if (opts.preconditioner != nullptr) opts.preconditioner->update(res.z, free);
    Eigen::VectorXd d = -apply_inverse_hessian(memory, opts.preconditioner, pg);
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (!free[i]) d[i] = 0.0;
    }
    double slope = res.gradient.dot(d);
    if (!(slope < 0)) {
      memory.clear();
      d = -pg;
      slope = res.gradient.dot(d);
    }
    double step = 1.0;
    if (memory.empty() && opts.preconditioner == nullptr) {
      step = std::min(1.0, 1.0 / d.lpNorm<Eigen::Infinity>());
    }

    Eigen::VectorXd z_trial;
    double f_trial = 0.0;
    bool accepted = false;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      z_trial = project(res.z + step * d, box);
      const double decrease = res.gradient.dot(z_trial - res.z);
      f_trial = fg(z_trial, grad_trial);
      if (std::isfinite(f_trial) && f_trial <= res.value + kArmijo * decrease) {
        accepted = true;
        break;
      }
      // Safeguarded quadratic interpolation along the unprojected direction.
      double next = 0.5 * step;
      if (std::isfinite(f_trial)) {
        const double denom = 2.0 * (f_trial - res.value - slope * step);
        if (denom > 0) next = std::clamp(-slope * step * step / denom, 0.1 * step, 0.5 * step);
      } else {
        next = 0.1 * step;
      }
      step = next;
    }
    if (!accepted || (z_trial - res.z).lpNorm<Eigen::Infinity>() == 0.0) {
      res.status = InnerStatus::LineSearchFailure;
      return res;
    }

    Eigen::VectorXd s = z_trial - res.z;
    Eigen::VectorXd y = grad_trial - res.gradient;
    const double sy = s.dot(y);
    if (sy > std::numeric_limits<double>::epsilon() * y.squaredNorm() && sy > 0) {
      memory.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(memory.size()) > opts.memory) memory.pop_front();
    }
    res.z = std::move(z_trial);
    res.value = f_trial;
    res.gradient = grad_trial;
    ++res.iterations;
  }
}

TranscribedNlp::TranscribedNlp(const NlpProblem& problem)
    : problem_(problem), box_{problem.lower, problem.upper} {}

double TranscribedNlp::objective(const Eigen::VectorXd& z) const {
  return dengue::objective(z, problem_);
}

Eigen::VectorXd TranscribedNlp::objective_gradient(const Eigen::VectorXd& z) const {
  return dengue::objective_gradient(z, problem_);
}

Eigen::VectorXd TranscribedNlp::constraints(const Eigen::VectorXd& z) const {
  return defects(z, problem_);
}

std::optional<Eigen::SparseMatrix<double>> TranscribedNlp::constraint_jacobian(
    const Eigen::VectorXd& z) const {
  return defect_jacobian(z, problem_);
}

Eigen::VectorXd TranscribedNlp::constraint_jacobian_transpose_times(
    const Eigen::VectorXd& z, const Eigen::VectorXd& v) const {
  return defect_jacobian_transpose_times(z, problem_, v);
}

KktResiduals kkt_residuals(const EqualityNlp& nlp, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& multipliers) {
  if (z.size() != nlp.num_vars() || multipliers.size() != nlp.num_cons()) {
    throw std::invalid_argument("kkt_residuals: dimension mismatch");
  }
  KktResiduals r;
  r.feasibility = nlp.constraints(z).lpNorm<Eigen::Infinity>();
  const Eigen::VectorXd g =
      nlp.objective_gradient(z) + nlp.constraint_jacobian_transpose_times(z, multipliers);
  r.stationarity = projected_gradient(z, g, nlp.bounds()).lpNorm<Eigen::Infinity>();
  return r;
}

KktResiduals kkt_residuals(const Eigen::VectorXd& z, const Eigen::VectorXd& multipliers,
                           const NlpProblem& problem) {
  return kkt_residuals(TranscribedNlp(problem), z, multipliers);
}

NlpSolution solve_nlp(const EqualityNlp& nlp, const Eigen::VectorXd& z0,
                      const SolverOptions& opts) {
  opts.validate();
  if (z0.size() != nlp.num_vars()) throw std::invalid_argument("z0 has the wrong length");

  NlpSolution sol;
  sol.z = project(z0, nlp.bounds());
  sol.multipliers = Eigen::VectorXd::Zero(nlp.num_cons());
  sol.penalty = opts.penalty_init;

  double inner_tol = opts.inner_tol_init;
  // No reference infeasibility before the first subproblem.
  double feas_prev = std::numeric_limits<double>::infinity();

  // Best iterate by scaled violation, reported when the budget runs out.
  NlpSolution best;
  double best_merit = std::numeric_limits<double>::infinity();

  for (int outer = 1; outer <= opts.max_outer; ++outer) {
    const Eigen::VectorXd lambda = sol.multipliers;
    const double penalty = sol.penalty;
    const ValueAndGradient augmented = [&](const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
      const Eigen::VectorXd c = nlp.constraints(z);
      const Eigen::VectorXd w = lambda + penalty * c;
      grad = nlp.objective_gradient(z) + nlp.constraint_jacobian_transpose_times(z, w);
      return nlp.objective(z) + lambda.dot(c) + 0.5 * penalty * c.squaredNorm();
    };
    std::optional<PenaltyPreconditioner> preconditioner;
    if (nlp.constraint_jacobian(sol.z)) preconditioner.emplace(nlp, penalty, opts.precond_shift);
    const InnerOptions inner_opts{std::max(inner_tol, 0.1 * opts.tol_opt), opts.max_inner,
                                  opts.lbfgs_memory,
                                  preconditioner ? &*preconditioner : nullptr};
    InnerResult inner = inner_minimize(augmented, sol.z, nlp.bounds(), inner_opts);

    sol.z = std::move(inner.z);
    sol.outer_iters = outer;
    sol.inner_iters_total += inner.iterations;
    const Eigen::VectorXd c = nlp.constraints(sol.z);
    sol.multipliers = lambda + penalty * c;
    sol.objective = nlp.objective(sol.z);
    sol.residuals = kkt_residuals(nlp, sol.z, sol.multipliers);
    const double feas = sol.residuals.feasibility;
    const double kkt = sol.residuals.stationarity;

    if (opts.verbose) {
      std::clog << "outer " << outer << "  obj " << sol.objective << "  feas " << feas
                << "  kkt " << kkt << "  rho " << penalty << "  inner " << inner.iterations
                << " (tol " << inner_opts.tolerance << ")\n";
    }

    if (feas <= opts.tol_feas && kkt <= opts.tol_opt) {
      sol.status = SolveStatus::Converged;
      return sol;
    }
    if (inner.status == InnerStatus::LineSearchFailure) {
      if (!(feas <= 10 * opts.tol_feas && kkt <= 10 * opts.tol_opt)) {
        sol.status = SolveStatus::InnerFailure;
        sol.note = "line search stalled at outer iteration " + std::to_string(outer) +
                   " (projected gradient " + std::to_string(inner.projected_gradient_norm) + ")";
        return sol;
      }
      sol.note = "line search stalled near the optimum; continued with updated multipliers";
    }

    const double merit = std::max(feas / opts.tol_feas, kkt / opts.tol_opt);
    if (merit < best_merit) {
      best_merit = merit;
      best = sol;
    }

    if (feas > opts.tol_feas && feas > opts.feas_decrease * feas_prev) {
      sol.penalty *= opts.penalty_growth;
    }
    feas_prev = feas;
    inner_tol *= 0.5;
  }

  best.status = SolveStatus::MaxIterations;
  best.outer_iters = sol.outer_iters;
  best.inner_iters_total = sol.inner_iters_total;
  best.note = "outer iteration budget exhausted; best iterate reported";
  return best;
}

Eigen::VectorXd initial_guess(const NlpProblem& problem) {
  const ControlVec u = ControlVec::Zero()
                           .cwiseMax(problem.control_bounds.lower)
                           .cwiseMin(problem.control_bounds.upper);
  const auto schedule = ControlSchedule::constant(problem.grid, problem.scheme, u);
  const auto traj = simulate(schedule, problem.scheme, problem.x_init, problem.params);
  return pack_trajectory(traj, problem.layout);
}

SolveReport solve(const NlpProblem& problem, const Eigen::VectorXd& z0,
                  const SolverOptions& opts) {
  const TranscribedNlp nlp(problem);
  const auto start = std::chrono::steady_clock::now();
  NlpSolution sol = solve_nlp(nlp, z0, opts);
  const auto stop = std::chrono::steady_clock::now();

  SolveReport report;
  report.status = sol.status;
  report.objective = sol.objective;
  report.outer_iters = sol.outer_iters;
  report.inner_iters_total = sol.inner_iters_total;
  report.feas_inf_norm = sol.residuals.feasibility;
  report.kkt_inf_norm = sol.residuals.stationarity;
  report.wall_time =
      std::round(std::chrono::duration<double>(stop - start).count() * 1000.0) / 1000.0;
  report.penalty = sol.penalty;
  report.note = std::move(sol.note);
  report.trajectory = unpack_trajectory(sol.z, problem);
  report.solution = std::move(sol.z);
  report.multipliers = std::move(sol.multipliers);
  return report;
}

}  // namespace dengue
