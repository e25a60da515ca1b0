#include "hev/closed_loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "hev/mpc.hpp"
#include "hev/preview.hpp"

namespace hev {

TrajectoryLog run_closed_loop(const AppConfig& cfg, const DriveTrace& trace,
                              const BinProfile* bin) {
  const PlantParams plant = cfg.plant();
  const ControllerConfig& cc = cfg.controller;
  const ScenarioConfig& sc = cfg.scenario;
  const double dt1 = cc.dt1;
  const bool use_mpc = cc.type == "mpc";
  const bool binned = use_mpc && cc.preview == "binned";
  // an advised trip follows its own plan, so its arrival time is known even
  // when the long-range speed forecast still comes from the bin statistics
  const bool planned_trip = sc.driving == "eco";
  if (binned && (bin == nullptr || !bin->usable()))
    throw ConfigError("closed loop: binned preview requires a usable bin profile");
  if (trace.size() < 2) throw ParseError("closed loop: trace too short");

  const double t0 = trace.start_time();
  const double t_end = trace.end_time();
  const int n_steps = static_cast<int>(std::floor((t_end - t0) / dt1 + 1e-9));
  if (n_steps < 1) throw ParseError("closed loop: trace shorter than one step");

  // speed samples on the control grid; the plant holds the backward
  // difference of these over each step
  Eigen::VectorXd vg(n_steps + 1);
  for (int k = 0; k <= n_steps; ++k) vg[k] = trace.speed_at(t0 + k * dt1);

  SampledProfile tail;
  double t_end_est = t_end;
  double t_prof_end = t_end;  // sustained-zero instant of the statistical tail
  double t_end_bias = 0.0;    // profile duration overstatement vs mean trip
  if (use_mpc) {
    if (binned) {
      tail = profile_from_bin(*bin, t0);
      t_prof_end = t0 + estimate_duration(*bin);
      t_end_bias = bin->mean_duration > 0.0
                       ? bin->mean_duration - (t_prof_end - t0)
                       : 0.0;
      t_end_est = t0 + bin->mean_duration;
    } else {
      // sample at dt1 so coarse nodes read the true trace, not an aliased
      // resample; dt2 sampling smears braking events across 10 s buckets
      tail = profile_from_trace(trace, cc.dt1);
    }
  }

  MpcConfig mcfg;
  mcfg.bounds = cc.bounds;
  mcfg.soc_init = sc.soc_init;
  mcfg.term_lo_frac = cc.term_lo_frac;
  mcfg.term_hi_frac = cc.term_hi_frac;
  mcfg.soft_weight = cc.soft_weight;
  mcfg.fallback = cc.rule;
  MpcController mpc(plant, mcfg);

  TrajectoryLog log;
  log.dt1 = dt1;
  log.soc_init = sc.soc_init;
  log.x0 = VehicleState{sc.soc_init, sc.t_cl_init, sc.t_cat_init, false};

  VehicleState s = log.x0;
  double fuel_cum = 0.0;
  double x_now = trace.x.size() ? trace.x[0] : 0.0;
  const double x_total = trace.x.size() ? trace.x[trace.x.size() - 1] : cfg.corridor.length;
  log.steps.reserve(n_steps);

  for (int k = 0; k < n_steps; ++k) {
    const double t = t0 + k * dt1;
    const double v = vg[k];
    const double v_prev = k == 0 ? vg[0] : vg[k - 1];
    const double a = (v - v_prev) / dt1;
    const double p_trac = traction_power(v, a, plant.road);

    ControlDecision d;
    if (use_mpc) {
      double t_hor = t_end;
      if (binned && !planned_trip) {
        // live duration estimate by matching distance left into the bin
        // profile, until the true end is one long step away (then the exact
        // end takes over); planning to the estimate minus one long step
        // keeps a charge-capacity margin against estimate error, otherwise
        // the optimizer defers charging right up to an end time that may
        // not exist
        if (t_end - t > cc.dt2) {
          t_end_est =
              reestimate_t_end_from_profile(tail, t_prof_end, t, x_total - x_now) + t_end_bias;
          t_hor = std::max(t_end_est - cc.dt2, t + dt1);
        }
      }
      const int h_left = static_cast<int>(std::floor((t_hor - t) / dt1 + 1e-9));
      const int h_r = std::max(1, std::min(cc.h_r, h_left));
      SpeedPreview pv = build_preview(trace, tail, t, h_r, dt1, cc.dt2, t_hor);
      if (k > 0) pv.v_prev = vg[k - 1];  // plant-grid sample, not a trace lookup
      d = mpc.step(s, pv);
    } else {
      const auto tic = std::chrono::steady_clock::now();
      d = rule_based_step(s, p_trac, plant.road.p_bat_aux, cc.rule, plant);
      d.diag.wall_time_sec =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    }

    const Control u{d.p_bat, d.engine_on};
    const VehicleState s_next = integrate_step(s, u, v, a, dt1, plant);
    const double p_eng = d.engine_on ? power_split(p_trac, d.p_bat, plant.road.p_bat_aux) : 0.0;
    const EnginePoint pt =
        d.engine_on ? ool_lookup(std::min(p_eng, plant.engine.p_max), plant.engine) : EnginePoint{};
    fuel_cum += dt1 * fuel_rate(pt, s.t_cl, plant.engine, plant.thermal);

    StepRecord r;
    r.t = t;
    r.v = v;
    r.p_trac = p_trac;
    r.p_bat = d.p_bat;
    r.p_eng = d.p_eng;
    r.engine_on = d.engine_on;
    r.soc = s.soc;
    r.t_cl = s.t_cl;
    r.t_cat = s.t_cat;
    r.fuel_cum_kg = fuel_cum;
    r.status = d.diag.solve_status;
    r.fallback = d.diag.fallback;
    r.soft = d.diag.soft_thermal;
    r.iterations = d.diag.iterations;
    r.wall_sec = d.diag.wall_time_sec;
    log.steps.push_back(r);

    s = s_next;
    x_now += 0.5 * (v + vg[k + 1]) * dt1;
  }
  log.x_final = s;
  return log;
}

TripMetrics compute_metrics(const TrajectoryLog& log, const AppConfig& cfg) {
  if (log.steps.empty()) throw ParseError("metrics: empty log");
  const OcpBounds& b = cfg.controller.bounds;
  constexpr double kSocTol = 1e-6;
  constexpr double kTempTol = 0.5;

  TripMetrics m;
  m.steps = static_cast<int>(log.steps.size());
  m.fuel_total_kg = log.steps.back().fuel_cum_kg;

  double on_time = 0.0, wall_sum = 0.0;
  double prev_t_cat = log.x0.t_cat;
  auto visit_state = [&](double soc, double t_cl, double t_cat) {
    if (soc < b.soc_min - kSocTol || soc > b.soc_max + kSocTol) {
      ++m.violations.soc;
      m.violations.soc_worst = std::max(
          m.violations.soc_worst, std::max(b.soc_min - soc, soc - b.soc_max));
    }
    if (t_cl < b.t_cl_min - kTempTol || t_cl > b.t_cl_max + kTempTol) {
      ++m.violations.t_cl;
      m.violations.t_cl_worst = std::max(
          m.violations.t_cl_worst, std::max(b.t_cl_min - t_cl, t_cl - b.t_cl_max));
    }
    // light-off floor only binds while the brick is hot at the step start
    if (prev_t_cat >= b.t_cat_min && t_cat < b.t_cat_min - kTempTol) {
      ++m.violations.t_cat;
      m.violations.t_cat_worst = std::max(m.violations.t_cat_worst, b.t_cat_min - t_cat);
    }
    prev_t_cat = t_cat;
  };

  for (std::size_t i = 1; i < log.steps.size(); ++i)
    visit_state(log.steps[i].soc, log.steps[i].t_cl, log.steps[i].t_cat);
  visit_state(log.x_final.soc, log.x_final.t_cl, log.x_final.t_cat);

  for (const StepRecord& r : log.steps) {
    if (r.engine_on) on_time += log.dt1;
    wall_sum += r.wall_sec;
    m.wall_max_sec = std::max(m.wall_max_sec, r.wall_sec);
    if (r.soft) ++m.soft_steps;
    if (r.fallback) ++m.fallback_steps;
  }
  m.engine_on_ratio = on_time / (m.steps * log.dt1);
  m.soc_terminal_dev = log.x_final.soc / log.soc_init - 1.0;
  m.wall_mean_sec = wall_sum / m.steps;
  return m;
}

std::vector<ComparisonRow> compare_cases(const std::vector<CaseSummary>& cases,
                                         std::size_t baseline) {
  if (cases.size() < 2) throw ConfigError("compare: need at least two cases");
  if (baseline >= cases.size()) throw ConfigError("compare: baseline index out of range");
  const CaseSummary& base = cases[baseline];
  std::vector<ComparisonRow> rows;
  rows.reserve(cases.size());
  for (const CaseSummary& c : cases) {
    ComparisonRow r;
    r.summary = c;
    r.fuel_delta_pct = base.fuel_kg > 0.0 ? 100.0 * (c.fuel_kg / base.fuel_kg - 1.0) : 0.0;
    r.on_ratio_delta_pct = base.engine_on_ratio > 0.0
                               ? 100.0 * (c.engine_on_ratio / base.engine_on_ratio - 1.0)
                               : 0.0;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace hev
