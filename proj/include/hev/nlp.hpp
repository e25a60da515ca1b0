#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace hev {

// Box-constrained NLP with inequality constraints c(z) <= 0, solved by an
// augmented Lagrangian outer loop around a projected-gradient inner loop.
// The weighted_constraint_gradient callback returns grad(w^T c) in one pass
// so the caller can push the weights through its adjoint sweep instead of
// forming the full Jacobian.
struct NlpProblem {
  Eigen::VectorXd lb, ub;  // box on z, sized n
  int n_ineq = 0;

  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> constraints;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      weighted_constraint_gradient;

  int n() const { return static_cast<int>(lb.size()); }
};

struct SolveOptions {
  int max_outer = 25;
  int max_inner = 200;
  double tol_stationarity = 1e-6;  // scaled projected-gradient residual
  double tol_feasibility = 1e-6;
  double mu0 = 10.0;
  double mu_growth = 10.0;
  double mu_max = 1e9;
  double armijo_c = 1e-4;
  int max_backtracks = 40;
  double time_budget_sec = 0.0;  // 0 = unlimited
};

enum class SolveStatus { kOptimal, kIterLimit, kInfeasible, kTimeBudget };

struct SolveReport {
  SolveStatus status = SolveStatus::kIterLimit;
  double objective = 0.0;
  double kkt_stationarity = 0.0;  // projected-gradient residual, inf norm
  double max_violation = 0.0;     // max(c(z), 0), inf norm
  int outer_iterations = 0;
  int inner_iterations = 0;
  double wall_time_sec = 0.0;

  bool ok() const { return status == SolveStatus::kOptimal; }
};

const char* to_string(SolveStatus s);

// z is the starting point on entry and the solution on exit; multipliers
// (sized n_ineq) are updated in place so warm starts carry over.
SolveReport solve_nlp(const NlpProblem& p, Eigen::VectorXd& z, Eigen::VectorXd& multipliers,
                      const SolveOptions& opts = {});

struct KktReport {
  double stationarity = 0.0;    // projected Lagrangian gradient, inf norm
  double feasibility = 0.0;     // max constraint violation
  double complementarity = 0.0; // max |lambda_i * c_i|
  double residual() const;
};

// Residuals at (z, multipliers); used by tests to confirm reported solutions
// are genuine KKT points.
KktReport check_kkt(const NlpProblem& p, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& multipliers);

Eigen::VectorXd finite_diff_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& z, double h = 1e-6);

}  // namespace hev
