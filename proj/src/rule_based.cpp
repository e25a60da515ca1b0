#include "hev/rule_based.hpp"

#include <algorithm>

namespace hev {

ControlDecision rule_based_step(const VehicleState& s, double p_trac, double p_bat_aux,
                                const RuleBasedConfig& cfg, const PlantParams& plant) {
  cfg.validate();
  const auto& bat = plant.battery;
  if (p_trac + p_bat_aux - plant.engine.p_max > bat.p_bat_max)
    throw ModelError("rule_based: demand exceeds combined engine and battery limits");

  const double demand = p_trac + p_bat_aux;
  const bool propulsion_on =
      p_trac > cfg.engine_on_power_threshold || (s.soc < cfg.soc_low && p_trac > 0.0);
  const bool cold =
      s.t_cl <= cfg.t_cl_idle_threshold || s.t_cat <= cfg.t_cat_idle_threshold;

  double p_eng_want = 0.0;
  if (propulsion_on) {
    // load leveling: demand plus a charge bias toward the SOC target; a large
    // negative bias (battery full) can push the engine all the way off
    const double want = demand + cfg.charge_bias_gain * (cfg.soc_target - s.soc);
    p_eng_want = want < 0.5 * cfg.idle_power ? 0.0
                                             : std::clamp(want, cfg.idle_power, plant.engine.p_max);
  } else if (cold) {
    p_eng_want = cfg.idle_power;
  }

  double lo = bat.p_bat_min;
  if (s.soc >= cfg.soc_regen_cutoff) lo = 0.0;  // battery full enough, stop charging

  ControlDecision d;
  d.p_bat = std::clamp(demand - p_eng_want, lo, bat.p_bat_max);
  // battery clamps win; the engine absorbs the remainder where it can
  d.p_eng = std::clamp(demand - d.p_bat, 0.0, plant.engine.p_max);
  if (p_eng_want > 0.0 && d.p_eng >= plant.engine.eps_on) {
    d.engine_on = true;
  } else {
    d.engine_on = false;
    d.p_eng = 0.0;
    d.p_bat = std::clamp(demand, lo, bat.p_bat_max);
  }
  return d;
}

}  // namespace hev
