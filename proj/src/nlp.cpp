#include "hev/nlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace hev {

namespace {

using Eigen::VectorXd;

VectorXd project(const NlpProblem& p, const VectorXd& z) {
  return z.cwiseMax(p.lb).cwiseMin(p.ub);
}

// PHR augmented Lagrangian for inequalities: sum of
// (max(0, lam + mu*c)^2 - lam^2) / (2 mu)
double al_penalty(const VectorXd& c, const VectorXd& lam, double mu) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double t = std::max(0.0, lam[i] + mu * c[i]);
    acc += (t * t - lam[i] * lam[i]) / (2.0 * mu);
  }
  return acc;
}

VectorXd al_weights(const VectorXd& c, const VectorXd& lam, double mu) {
  VectorXd w(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) w[i] = std::max(0.0, lam[i] + mu * c[i]);
  return w;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kIterLimit: return "max_iter";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kTimeBudget: return "time_budget";
  }
  return "unknown";
}

SolveReport solve_nlp(const NlpProblem& p, VectorXd& z, VectorXd& lam, const SolveOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = p.n();
  if (z.size() != n) throw std::invalid_argument("solve_nlp: z size mismatch");
  if (lam.size() != p.n_ineq) {
    lam = VectorXd::Zero(p.n_ineq);
  }
  const bool has_c = p.n_ineq > 0;

  z = project(p, z);
  double mu = opts.mu0;
  SolveReport rep;

  auto eval_al = [&](const VectorXd& zz, VectorXd& c_out) {
    const double f = p.objective(zz);
    if (!has_c) return f;
    c_out = p.constraints(zz);
    return f + al_penalty(c_out, lam, mu);
  };
  auto grad_al = [&](const VectorXd& zz, const VectorXd& c_at_zz) {
    VectorXd g = p.gradient(zz);
    if (has_c) g += p.weighted_constraint_gradient(zz, al_weights(c_at_zz, lam, mu));
    return g;
  };

  VectorXd c = has_c ? p.constraints(z) : VectorXd();
  double viol_prev = has_c && c.size() > 0 ? c.cwiseMax(0.0).maxCoeff() : 0.0;
  bool viol_stalled = false;

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    rep.outer_iterations = outer + 1;

    // --- projected gradient with BB step and monotone Armijo backtracking ---
    VectorXd cz;
    double L = eval_al(z, cz);
    VectorXd g = grad_al(z, cz);
    double alpha = 1.0 / std::max(1e-8, g.lpNorm<Eigen::Infinity>());
    VectorXd z_prev = z, g_prev = g;
    bool inner_converged = false;

    for (int inner = 0; inner < opts.max_inner; ++inner) {
      rep.inner_iterations += 1;
      const double stat = (z - project(p, z - g)).lpNorm<Eigen::Infinity>();
      if (stat <= opts.tol_stationarity) {
        inner_converged = true;
        break;
      }
      if (opts.time_budget_sec > 0 && seconds_since(t0) > opts.time_budget_sec) {
        rep.status = SolveStatus::kTimeBudget;
        break;
      }

      double a = std::clamp(alpha, 1e-12, 1e6);
      VectorXd z_new, c_new;
      double L_new = 0.0;
      bool accepted = false;
      for (int bt = 0; bt < opts.max_backtracks; ++bt) {
        z_new = project(p, z - a * g);
        const VectorXd d = z_new - z;
        if (d.lpNorm<Eigen::Infinity>() < 1e-14) break;
        L_new = eval_al(z_new, c_new);
        if (L_new <= L - (opts.armijo_c / a) * d.squaredNorm()) {
          accepted = true;
          break;
        }
        a *= 0.5;
      }
      if (!accepted) {
        inner_converged = true;  // no descent step left at this scale
        break;
      }

      z_prev = z;
      g_prev = g;
      z = z_new;
      L = L_new;
      if (has_c) cz = c_new;
      g = grad_al(z, cz);

      const VectorXd s = z - z_prev;
      const VectorXd y = g - g_prev;
      const double sy = s.dot(y);
      alpha = sy > 1e-14 ? s.squaredNorm() / sy : 2.0 * a;
    }

    if (rep.status == SolveStatus::kTimeBudget) break;

    // --- multiplier / penalty update ---
    if (has_c) {
      c = p.constraints(z);
      const double viol = c.size() > 0 ? std::max(0.0, c.cwiseMax(0.0).maxCoeff()) : 0.0;
      for (Eigen::Index i = 0; i < lam.size(); ++i)
        lam[i] = std::max(0.0, lam[i] + mu * c[i]);
      const double stat = (z - project(p, z - grad_al(z, c))).lpNorm<Eigen::Infinity>();
      if (stat <= opts.tol_stationarity && viol <= opts.tol_feasibility) {
        rep.status = SolveStatus::kOptimal;
        break;
      }
      if (viol > 0.25 * viol_prev && mu < opts.mu_max) mu = std::min(opts.mu_max, mu * opts.mu_growth);
      viol_stalled = viol > 0.9 * viol_prev;
      viol_prev = viol;
      if (!inner_converged && outer == opts.max_outer - 1) rep.status = SolveStatus::kIterLimit;
    } else {
      const double stat = (z - project(p, z - p.gradient(z))).lpNorm<Eigen::Infinity>();
      if (stat <= opts.tol_stationarity) {
        rep.status = SolveStatus::kOptimal;
        break;
      }
    }
  }

  rep.objective = p.objective(z);
  if (has_c) {
    c = p.constraints(z);
    rep.max_violation = c.size() > 0 ? std::max(0.0, c.cwiseMax(0.0).maxCoeff()) : 0.0;
    rep.kkt_stationarity =
        (z - project(p, z - grad_al(z, c))).lpNorm<Eigen::Infinity>();
  } else {
    rep.kkt_stationarity = (z - project(p, z - p.gradient(z))).lpNorm<Eigen::Infinity>();
  }
  if (rep.kkt_stationarity <= opts.tol_stationarity &&
      rep.max_violation <= opts.tol_feasibility) {
    rep.status = SolveStatus::kOptimal;
  } else if (rep.status != SolveStatus::kTimeBudget &&
             rep.max_violation > 10.0 * opts.tol_feasibility && mu >= opts.mu_max &&
             viol_stalled) {
    // call it infeasible only once the penalty is saturated and pushing
    // harder stopped helping; anything else is just an iteration limit
    rep.status = SolveStatus::kInfeasible;
  }
  rep.wall_time_sec = seconds_since(t0);
  return rep;
}

double KktReport::residual() const {
  return std::max({stationarity, feasibility, complementarity});
}

KktReport check_kkt(const NlpProblem& p, const VectorXd& z, const VectorXd& lam) {
  KktReport r;
  VectorXd g = p.gradient(z);
  if (p.n_ineq > 0) {
    const VectorXd c = p.constraints(z);
    g += p.weighted_constraint_gradient(z, lam);
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      r.feasibility = std::max(r.feasibility, c[i]);
      r.complementarity = std::max(r.complementarity, std::abs(lam[i] * c[i]));
    }
    r.feasibility = std::max(0.0, r.feasibility);
  }
  r.stationarity = (z - (z - g).cwiseMax(p.lb).cwiseMin(p.ub)).lpNorm<Eigen::Infinity>();
  return r;
}

VectorXd finite_diff_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& z,
                              double h) {
  VectorXd g(z.size());
  VectorXd zp = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double zi = z[i];
    zp[i] = zi + h;
    const double fp = f(zp);
    zp[i] = zi - h;
    const double fm = f(zp);
    zp[i] = zi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace hev
