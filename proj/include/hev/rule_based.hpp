#pragma once

#include "hev/models.hpp"
#include "hev/nlp.hpp"

namespace hev {

struct RuleBasedConfig {
  double soc_target = 0.6;
  double soc_low = 0.55;
  double soc_high = 0.65;
  double soc_regen_cutoff = 0.78;        // stop charging near the upper bound
  double engine_on_power_threshold = 8e3;  // W of traction demand
  double t_cl_idle_threshold = 50.0;       // C
  double t_cat_idle_threshold = 250.0;     // C
  double idle_power = 3e3;                 // W engine power while idling
  double charge_bias_gain = 1e5;           // W per unit of SOC error

  void validate() const {
    if (!(soc_low < soc_target && soc_target < soc_high))
      throw ModelError("rule_based: need soc_low < soc_target < soc_high");
    if (idle_power < 0 || engine_on_power_threshold < 0 || charge_bias_gain < 0)
      throw ModelError("rule_based: negative parameter");
  }
};

struct ControlDiagnostics {
  SolveStatus solve_status = SolveStatus::kOptimal;
  bool fallback = false;      // rule-based took over after a solver failure
  bool soft_thermal = false;  // solved with the thermal bounds as penalties
  double cost = 0.0;          // predicted horizon fuel, kg
  int iterations = 0;
  double wall_time_sec = 0.0;
};

struct ControlDecision {
  double p_bat = 0.0;   // W, discharge positive
  double p_eng = 0.0;   // W, commanded engine power (0 when off)
  bool engine_on = false;
  ControlDiagnostics diag;
};

// Load-leveling baseline with a cold-start idle override: while the coolant
// or catalyst sits below its threshold and no propulsion need keeps the
// engine running anyway, the engine idles to warm both up.
ControlDecision rule_based_step(const VehicleState& s, double p_trac, double p_bat_aux,
                                const RuleBasedConfig& cfg, const PlantParams& plant);

}  // namespace hev
