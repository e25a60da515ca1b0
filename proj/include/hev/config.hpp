#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hev/corridor.hpp"
#include "hev/models.hpp"
#include "hev/ocp.hpp"
#include "hev/rule_based.hpp"

namespace hev {

struct ControllerConfig {
  std::string type = "mpc";       // "rule_based" | "mpc"
  std::string preview = "exact";  // "exact" | "binned" (mpc only)
  int h_r = 5;
  double dt1 = 1.0;
  double dt2 = 10.0;
  OcpBounds bounds;
  double term_lo_frac = 0.99;
  double term_hi_frac = 1.01;
  double soft_weight = 1e4;
  RuleBasedConfig rule;  // the baseline controller and the mpc fallback

  void validate() const;
};

struct ScenarioConfig {
  std::string scenario = "I";      // "I" | "II"
  std::string label;               // optional case label: A..C or I..IV
  std::string driving = "normal";  // "normal" | "eco"
  int n_vehicles = 20;
  std::uint64_t seed = 1;
  double soc_init = 0.6;
  double t_cl_init = 50.0;
  double t_cat_init = 250.0;

  void validate() const;
};

struct AppConfig {
  BatteryParams battery;
  EngineThermalParams engine_thermal;
  CatalystParams catalyst;
  RoadLoadParams road_load;
  CorridorConfig corridor = default_corridor();
  ControllerConfig controller;
  ScenarioConfig scenario;

  void validate() const;
  PlantParams plant() const;  // assembled with the built-in engine tables
};

// One row of a scenario's case matrix; the label pins the driving style,
// controller, and preview source.
struct RunCase {
  std::string label;
  std::string driving;
  std::string controller;
  std::string preview;
};

// Case matrices: scenario I compares controllers under normal driving
// (A rules, B exact-preview mpc, C binned mpc); scenario II crosses driving
// style with the controller (I rules/normal, II rules/eco, III exact mpc/eco,
// IV binned mpc/eco).
std::vector<RunCase> scenario_matrix(const std::string& scenario);

void apply_case(AppConfig& cfg, const RunCase& rc);

AppConfig load_config(const std::string& path);        // throws ConfigError
AppConfig parse_config(const std::string& json_text);  // same, from memory

}  // namespace hev
