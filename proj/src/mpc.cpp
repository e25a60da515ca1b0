#include "hev/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace hev {
namespace {

std::vector<double> node_times(const SpeedPreview& pv) {
  std::vector<double> t;
  t.reserve(pv.h_short() + pv.h_long());
  for (int k = 0; k < pv.h_short(); ++k) t.push_back(pv.t_now + k * pv.dt1);
  const double t2 = pv.t_now + pv.h_short() * pv.dt1;
  for (int j = 0; j < pv.h_long(); ++j) t.push_back(t2 + j * pv.dt2);
  return t;
}

// Battery power at which one dt of discharge lands exactly on soc_min.
double discharge_cap(const VehicleState& s, double dt, double soc_min, const BatteryParams& b) {
  const double r_min = (soc_min - s.soc) / dt;  // most negative admissible SOC rate
  if (r_min >= 0.0) return 0.0;
  const double u = b.u_oc(s.soc);
  const double root = u + 2.0 * b.r_int * b.c_bat * r_min;
  if (root <= 0.0) return u * u / (4.0 * b.r_int);
  return (u * u - root * root) / (4.0 * b.r_int);
}

}  // namespace

Eigen::VectorXd warm_start_shift(const std::vector<double>& prev_times,
                                 const Eigen::VectorXd& prev_values,
                                 const std::vector<double>& new_times) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(new_times.size()));
  if (prev_values.size() == 0) {
    out.setZero();
    return out;
  }
  const int np = static_cast<int>(prev_times.size());
  for (size_t i = 0; i < new_times.size(); ++i) {
    // previous node active at this start time; past the old horizon keep the last
    int k = np - 1;
    for (int j = 1; j < np; ++j) {
      if (prev_times[j] > new_times[i] + 1e-9) {
        k = j - 1;
        break;
      }
    }
    out[static_cast<Eigen::Index>(i)] = prev_values[std::min<int>(k, prev_values.size() - 1)];
  }
  return out;
}

MpcController::MpcController(const PlantParams& plant, const MpcConfig& cfg)
    : plant_(plant), cfg_(cfg) {
  plant_.validate();
  cfg_.fallback.validate();
  if (!plant_.engine.built()) plant_.engine.build();
}

void MpcController::reset() {
  warm_valid_ = false;
  last_p_.resize(0);
  last_t_.clear();
}

ControlDecision MpcController::step(const VehicleState& s, const SpeedPreview& preview) {
  const auto tic = std::chrono::steady_clock::now();
  const auto elapsed = [&tic] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
  };
  const std::vector<double> times = node_times(preview);

  OcpSpec spec;
  spec.x0 = s;
  spec.preview = preview;
  spec.bounds = cfg_.bounds;
  spec.soc_init = cfg_.soc_init;
  spec.term_lo_frac = cfg_.term_lo_frac;
  spec.term_hi_frac = cfg_.term_hi_frac;
  spec.soft_weight = cfg_.soft_weight;

  const double p_trac0 = traction_power(
      preview.v_short[0], (preview.v_short[0] - preview.v_prev) / preview.dt1, plant_.road);
  const auto fall_back = [&](SolveStatus st) {
    ControlDecision d = rule_based_step(s, p_trac0, plant_.road.p_bat_aux, cfg_.fallback, plant_);
    d.diag.solve_status = st;
    d.diag.fallback = true;
    d.diag.wall_time_sec = elapsed();
    warm_valid_ = false;
    return d;
  };

  // solve ladder: hard from the shifted warm start, a cold restart if that
  // stalls without converging, a soft-thermal retry if hard is infeasible
  enum class Attempt { kWarm, kCold, kSoft };
  std::vector<Attempt> ladder{warm_valid_ ? Attempt::kWarm : Attempt::kCold};
  Eigen::VectorXd z, lambda;
  SolveReport rep;
  bool soft = false;
  try {
    for (size_t attempt = 0; attempt < ladder.size(); ++attempt) {
      spec.soft_thermal = ladder[attempt] == Attempt::kSoft;
      OcpTranscription ocp(spec, plant_);
      switch (ladder[attempt]) {
        case Attempt::kWarm:
          z = (warm_start_shift(last_t_, last_p_, times) / OcpTranscription::kPowerScale)
                  .cwiseMax(ocp.nlp().lb)
                  .cwiseMin(ocp.nlp().ub);
          break;
        case Attempt::kCold:
          z = ocp.initial_guess();
          break;
        case Attempt::kSoft:
          z = z.cwiseMax(ocp.nlp().lb).cwiseMin(ocp.nlp().ub);
          break;
      }
      lambda = Eigen::VectorXd::Zero(ocp.nlp().n_ineq);
      SolveOptions opts = cfg_.solver;
      if (opts.time_budget_sec > 0.0)
        opts.time_budget_sec = std::max(0.05, opts.time_budget_sec - elapsed());
      rep = solve_nlp(ocp.nlp(), z, lambda, opts);
      soft = spec.soft_thermal;
      const bool usable = rep.max_violation <= 1e-6 && rep.status != SolveStatus::kInfeasible;
      if (!usable && attempt + 1 == ladder.size()) {
        if (ladder[attempt] == Attempt::kWarm) {
          ladder.push_back(Attempt::kCold);
        } else if (rep.status == SolveStatus::kInfeasible && !soft) {
          ladder.push_back(Attempt::kSoft);
        }
      }
      if (usable) {
        ControlDecision d;
        d.p_bat = ocp.p_from_z(z[0]);
        const double pe0 = p_trac0 + plant_.road.p_bat_aux - d.p_bat;
        if (pe0 < plant_.engine.eps_on) {
          const double demand = p_trac0 + plant_.road.p_bat_aux;
          if (demand > 0.0) {
            // electric first move: cover the whole demand from the battery if
            // one dt1 of it cannot breach soc_min
            const double cap = std::min(
                {plant_.battery.p_bat_max,
                 discharge_cap(s, preview.dt1, cfg_.bounds.soc_min, plant_.battery)});
            d.p_bat = std::clamp(demand, plant_.battery.p_bat_min, cap);
            d.p_eng = std::max(0.0, demand - d.p_bat);
            d.engine_on = d.p_eng >= plant_.engine.eps_on;
            if (!d.engine_on) d.p_eng = 0.0;
          } else {
            // braking or coast: keep the planned (possibly partial) regen so
            // the terminal band stays respected; friction takes the surplus
            d.p_bat = std::clamp(d.p_bat, plant_.battery.p_bat_min, 0.0);
            d.p_eng = 0.0;
            d.engine_on = false;
          }
        } else {
          d.p_eng = pe0;
          d.engine_on = true;
        }
        d.diag.solve_status = rep.status;
        d.diag.soft_thermal = soft;
        d.diag.cost = ocp.fuel_kg(z);
        d.diag.iterations = rep.inner_iterations;
        d.diag.wall_time_sec = elapsed();
        last_p_ = z * OcpTranscription::kPowerScale;
        last_t_ = times;
        warm_valid_ = true;
        return d;
      }
    }
  } catch (const OcpError&) {
    return fall_back(SolveStatus::kInfeasible);
  }
  return fall_back(rep.status);
}

}  // namespace hev
