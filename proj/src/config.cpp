#include "hev/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hev {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!ok.count(item.key()))
      throw ConfigError("config: unknown key '" + item.key() + "' in " + section);
  }
}

double num(const json& j, const char* key, double dflt) {
  if (!j.contains(key)) return dflt;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string("config: ") + key + " must be a number");
  return v.get<double>();
}

int integer(const json& j, const char* key, int dflt) {
  if (!j.contains(key)) return dflt;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(std::string("config: ") + key + " must be an integer");
  return v.get<int>();
}

bool boolean(const json& j, const char* key, bool dflt) {
  if (!j.contains(key)) return dflt;
  const json& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(std::string("config: ") + key + " must be a boolean");
  return v.get<bool>();
}

std::string text(const json& j, const char* key, const std::string& dflt) {
  if (!j.contains(key)) return dflt;
  const json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(std::string("config: ") + key + " must be a string");
  return v.get<std::string>();
}

void parse_battery(const json& j, BatteryParams& b) {
  check_keys(j, "battery", {"c_bat", "r_int", "u_oc", "p_bat_min", "p_bat_max"});
  b.c_bat = num(j, "c_bat", b.c_bat);
  b.r_int = num(j, "r_int", b.r_int);
  b.u_oc_const = num(j, "u_oc", b.u_oc_const);
  b.p_bat_min = num(j, "p_bat_min", b.p_bat_min);
  b.p_bat_max = num(j, "p_bat_max", b.p_bat_max);
}

void parse_engine_thermal(const json& j, EngineThermalParams& th) {
  check_keys(j, "engine_thermal",
             {"thermal_mass", "thermal_capacity", "lhv", "q_exh_fraction", "q_air_coeff",
              "t_thermostat", "q_air_thermostat", "q_heat_demand", "heating_enabled", "t_amb"});
  th.thermal_mass = num(j, "thermal_mass", th.thermal_mass);
  th.thermal_capacity = num(j, "thermal_capacity", th.thermal_capacity);
  th.lhv = num(j, "lhv", th.lhv);
  th.q_exh_fraction = num(j, "q_exh_fraction", th.q_exh_fraction);
  th.q_air_coeff = num(j, "q_air_coeff", th.q_air_coeff);
  th.t_thermostat = num(j, "t_thermostat", th.t_thermostat);
  th.q_air_thermostat = num(j, "q_air_thermostat", th.q_air_thermostat);
  th.q_heat_demand = num(j, "q_heat_demand", th.q_heat_demand);
  th.heating_enabled = boolean(j, "heating_enabled", th.heating_enabled);
  th.t_amb = num(j, "t_amb", th.t_amb);
}

void parse_catalyst(const json& j, CatalystParams& c) {
  check_keys(j, "catalyst",
             {"a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8", "b1", "b2", "t_amb", "light_off"});
  c.a1 = num(j, "a1", c.a1);
  c.a2 = num(j, "a2", c.a2);
  c.a3 = num(j, "a3", c.a3);
  c.a4 = num(j, "a4", c.a4);
  c.a5 = num(j, "a5", c.a5);
  c.a6 = num(j, "a6", c.a6);
  c.a7 = num(j, "a7", c.a7);
  c.a8 = num(j, "a8", c.a8);
  c.b1 = num(j, "b1", c.b1);
  c.b2 = num(j, "b2", c.b2);
  c.t_amb = num(j, "t_amb", c.t_amb);
  c.light_off = num(j, "light_off", c.light_off);
}

void parse_road_load(const json& j, RoadLoadParams& r) {
  check_keys(j, "road_load", {"mass", "rolling_coeff", "drag_area_coeff", "p_bat_aux"});
  r.mass = num(j, "mass", r.mass);
  r.rolling_coeff = num(j, "rolling_coeff", r.rolling_coeff);
  r.drag_area_coeff = num(j, "drag_area_coeff", r.drag_area_coeff);
  r.p_bat_aux = num(j, "p_bat_aux", r.p_bat_aux);
}

void parse_corridor(const json& j, CorridorConfig& c) {
  check_keys(j, "corridor",
             {"cycle", "speed_limit", "length", "a_max", "n_bins", "intersections"});
  const double cycle = num(j, "cycle", c.cycle());
  c.speed_limit = num(j, "speed_limit", c.speed_limit);
  c.length = num(j, "length", c.length);
  c.a_max = num(j, "a_max", c.a_max);
  c.n_bins = integer(j, "n_bins", c.n_bins);
  if (j.contains("intersections")) {
    const json& arr = j.at("intersections");
    if (!arr.is_array()) throw ConfigError("config: corridor.intersections must be an array");
    c.intersections.clear();
    for (const json& e : arr) {
      check_keys(e, "corridor.intersections[]", {"position", "green_start", "green_duration"});
      Intersection ix;
      ix.position = num(e, "position", -1.0);
      ix.green_start = num(e, "green_start", 0.0);
      ix.green_duration = num(e, "green_duration", 0.0);
      ix.cycle = cycle;
      c.intersections.push_back(ix);
    }
  } else {
    for (Intersection& ix : c.intersections) ix.cycle = cycle;
  }
}

void parse_bounds(const json& j, OcpBounds& b) {
  check_keys(j, "controller.bounds", {"soc_min", "soc_max", "t_cl_min", "t_cl_max", "t_cat_min"});
  b.soc_min = num(j, "soc_min", b.soc_min);
  b.soc_max = num(j, "soc_max", b.soc_max);
  b.t_cl_min = num(j, "t_cl_min", b.t_cl_min);
  b.t_cl_max = num(j, "t_cl_max", b.t_cl_max);
  b.t_cat_min = num(j, "t_cat_min", b.t_cat_min);
}

void parse_rule(const json& j, RuleBasedConfig& r) {
  check_keys(j, "controller.rule",
             {"soc_target", "soc_low", "soc_high", "soc_regen_cutoff", "engine_on_power_threshold",
              "t_cl_idle_threshold", "t_cat_idle_threshold", "idle_power", "charge_bias_gain"});
  r.soc_target = num(j, "soc_target", r.soc_target);
  r.soc_low = num(j, "soc_low", r.soc_low);
  r.soc_high = num(j, "soc_high", r.soc_high);
  r.soc_regen_cutoff = num(j, "soc_regen_cutoff", r.soc_regen_cutoff);
  r.engine_on_power_threshold = num(j, "engine_on_power_threshold", r.engine_on_power_threshold);
  r.t_cl_idle_threshold = num(j, "t_cl_idle_threshold", r.t_cl_idle_threshold);
  r.t_cat_idle_threshold = num(j, "t_cat_idle_threshold", r.t_cat_idle_threshold);
  r.idle_power = num(j, "idle_power", r.idle_power);
  r.charge_bias_gain = num(j, "charge_bias_gain", r.charge_bias_gain);
}

void parse_controller(const json& j, ControllerConfig& c) {
  check_keys(j, "controller",
             {"type", "preview", "h_r", "dt1", "dt2", "bounds", "term_lo_frac", "term_hi_frac",
              "soft_weight", "rule"});
  c.type = text(j, "type", c.type);
  c.preview = text(j, "preview", c.preview);
  c.h_r = integer(j, "h_r", c.h_r);
  c.dt1 = num(j, "dt1", c.dt1);
  c.dt2 = num(j, "dt2", c.dt2);
  c.term_lo_frac = num(j, "term_lo_frac", c.term_lo_frac);
  c.term_hi_frac = num(j, "term_hi_frac", c.term_hi_frac);
  c.soft_weight = num(j, "soft_weight", c.soft_weight);
  if (j.contains("bounds")) parse_bounds(j.at("bounds"), c.bounds);
  if (j.contains("rule")) parse_rule(j.at("rule"), c.rule);
}

void parse_scenario(const json& j, ScenarioConfig& s) {
  check_keys(j, "scenario",
             {"scenario", "label", "driving", "n_vehicles", "seed", "soc_init", "t_cl_init",
              "t_cat_init"});
  s.scenario = text(j, "scenario", s.scenario);
  s.label = text(j, "label", s.label);
  s.driving = text(j, "driving", s.driving);
  s.n_vehicles = integer(j, "n_vehicles", s.n_vehicles);
  if (j.contains("seed")) {
    const json& v = j.at("seed");
    if (!v.is_number_unsigned() && !v.is_number_integer())
      throw ConfigError("config: seed must be an unsigned integer");
    s.seed = v.get<std::uint64_t>();
  }
  s.soc_init = num(j, "soc_init", s.soc_init);
  s.t_cl_init = num(j, "t_cl_init", s.t_cl_init);
  s.t_cat_init = num(j, "t_cat_init", s.t_cat_init);
}

const RunCase* find_case(const std::vector<RunCase>& matrix, const std::string& label) {
  for (const RunCase& rc : matrix)
    if (rc.label == label) return &rc;
  return nullptr;
}

}  // namespace

void ControllerConfig::validate() const {
  if (type != "rule_based" && type != "mpc")
    throw ConfigError("config: controller.type must be rule_based or mpc");
  if (preview != "exact" && preview != "binned")
    throw ConfigError("config: controller.preview must be exact or binned");
  if (h_r < 1) throw ConfigError("config: controller.h_r must be >= 1");
  if (dt1 <= 0 || dt2 <= 0) throw ConfigError("config: controller step sizes must be positive");
  if (dt2 + 1e-12 < dt1) throw ConfigError("config: controller.dt2 must be >= dt1");
  if (!(bounds.soc_min < bounds.soc_max) || !(bounds.t_cl_min < bounds.t_cl_max))
    throw ConfigError("config: controller.bounds out of order");
  if (!(term_lo_frac < term_hi_frac) || term_lo_frac <= 0)
    throw ConfigError("config: controller terminal band out of order");
  if (soft_weight <= 0) throw ConfigError("config: controller.soft_weight must be positive");
  try {
    rule.validate();
  } catch (const ModelError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

void ScenarioConfig::validate() const {
  if (scenario != "I" && scenario != "II")
    throw ConfigError("config: scenario.scenario must be I or II");
  if (driving != "normal" && driving != "eco")
    throw ConfigError("config: scenario.driving must be normal or eco");
  if (n_vehicles < 1) throw ConfigError("config: scenario.n_vehicles must be >= 1");
  if (!(soc_init > 0.0 && soc_init < 1.0))
    throw ConfigError("config: scenario.soc_init must be in (0,1)");
}

void AppConfig::validate() const {
  try {
    battery.validate();
    engine_thermal.validate();
    catalyst.validate();
    road_load.validate();
  } catch (const ModelError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  corridor.validate();
  controller.validate();
  scenario.validate();
  if (!scenario.label.empty()) {
    const auto matrix = scenario_matrix(scenario.scenario);
    const RunCase* rc = find_case(matrix, scenario.label);
    if (!rc)
      throw ConfigError("config: label '" + scenario.label + "' is not in scenario " +
                        scenario.scenario);
    if (rc->driving != scenario.driving || rc->controller != controller.type ||
        (controller.type == "mpc" && rc->preview != controller.preview))
      throw ConfigError("config: label '" + scenario.label +
                        "' conflicts with the driving/controller/preview settings");
  }
}

PlantParams AppConfig::plant() const {
  PlantParams p;
  p.battery = battery;
  p.thermal = engine_thermal;
  p.catalyst = catalyst;
  p.road = road_load;
  p.engine.build();
  p.validate();
  return p;
}

std::vector<RunCase> scenario_matrix(const std::string& scenario) {
  if (scenario == "I")
    return {{"A", "normal", "rule_based", "exact"},
            {"B", "normal", "mpc", "exact"},
            {"C", "normal", "mpc", "binned"}};
  if (scenario == "II")
    return {{"I", "normal", "rule_based", "exact"},
            {"II", "eco", "rule_based", "exact"},
            {"III", "eco", "mpc", "exact"},
            {"IV", "eco", "mpc", "binned"}};
  throw ConfigError("config: unknown scenario '" + scenario + "'");
}

void apply_case(AppConfig& cfg, const RunCase& rc) {
  cfg.scenario.label = rc.label;
  cfg.scenario.driving = rc.driving;
  cfg.controller.type = rc.controller;
  cfg.controller.preview = rc.preview;
}

AppConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(j, "top level",
             {"battery", "engine_thermal", "catalyst", "road_load", "corridor", "controller",
              "scenario"});
  AppConfig cfg;
  if (j.contains("battery")) parse_battery(j.at("battery"), cfg.battery);
  if (j.contains("engine_thermal")) parse_engine_thermal(j.at("engine_thermal"), cfg.engine_thermal);
  if (j.contains("catalyst")) parse_catalyst(j.at("catalyst"), cfg.catalyst);
  if (j.contains("road_load")) parse_road_load(j.at("road_load"), cfg.road_load);
  if (j.contains("corridor")) parse_corridor(j.at("corridor"), cfg.corridor);
  if (j.contains("controller")) parse_controller(j.at("controller"), cfg.controller);
  if (j.contains("scenario")) parse_scenario(j.at("scenario"), cfg.scenario);
  cfg.validate();
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace hev
