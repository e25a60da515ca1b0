#pragma once

#include <Eigen/Dense>

#include <vector>

#include "hev/ocp.hpp"
#include "hev/rule_based.hpp"

namespace hev {

// Piecewise-constant re-bucketing of the previous solution onto a new node
// grid: each new node takes the value of the previous node active at its
// start time; times past the old horizon repeat the last value. Dropping the
// first entry falls out of the time shift.
Eigen::VectorXd warm_start_shift(const std::vector<double>& prev_times,
                                 const Eigen::VectorXd& prev_values,
                                 const std::vector<double>& new_times);

struct MpcConfig {
  OcpBounds bounds;
  double soc_init = 0.6;
  double term_lo_frac = 0.99;
  double term_hi_frac = 1.01;
  double soft_weight = 1e4;
  SolveOptions solver{.max_outer = 20,
                      .max_inner = 1500,
                      .tol_stationarity = 5e-6,
                      .tol_feasibility = 1e-7,
                      .mu0 = 100.0,
                      .time_budget_sec = 0.8};
  RuleBasedConfig fallback;
};

// Receding-horizon controller over the two-resolution preview. Solves the
// hard-constrained problem first, retries with softened thermal bounds if
// that comes back infeasible, and falls back to the rule-based policy when
// both fail. Stateful: keeps the previous solution for warm starting.
class MpcController {
 public:
  MpcController(const PlantParams& plant, const MpcConfig& cfg);

  ControlDecision step(const VehicleState& s, const SpeedPreview& preview);
  void reset();

  // full solution of the last step, for tests and logging
  const Eigen::VectorXd& last_p_bat() const { return last_p_; }
  const std::vector<double>& last_times() const { return last_t_; }

 private:
  PlantParams plant_;
  MpcConfig cfg_;
  Eigen::VectorXd last_p_;  // W per node
  std::vector<double> last_t_;
  bool warm_valid_ = false;
};

}  // namespace hev
