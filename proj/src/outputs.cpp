#include "hev/outputs.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace hev {

using nlohmann::json;

void save_trajectory_csv(const TrajectoryLog& log, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ParseError("cannot open " + path + " for writing");
  std::fputs(
      "t_sec,v_mps,p_trac_w,p_bat_w,p_eng_w,engine_on,soc,t_cl_c,t_cat_c,fuel_cum_kg,"
      "status,fallback,soft\n",
      f);
  for (const StepRecord& r : log.steps) {
    std::fprintf(f, "%.10g,%.10g,%.10g,%.10g,%.10g,%d,%.10g,%.10g,%.10g,%.10g,%s,%d,%d\n", r.t,
                 r.v, r.p_trac, r.p_bat, r.p_eng, r.engine_on ? 1 : 0, r.soc, r.t_cl, r.t_cat,
                 r.fuel_cum_kg, to_string(r.status), r.fallback ? 1 : 0, r.soft ? 1 : 0);
  }
  std::fclose(f);
}

void save_metrics_json(const TripMetrics& m, const std::string& path) {
  json j{{"fuel_total_kg", m.fuel_total_kg},
         {"engine_on_ratio", m.engine_on_ratio},
         {"soc_terminal_dev", m.soc_terminal_dev},
         {"steps", m.steps},
         {"soft_steps", m.soft_steps},
         {"fallback_steps", m.fallback_steps},
         {"wall_mean_sec", m.wall_mean_sec},
         {"wall_max_sec", m.wall_max_sec},
         {"violations",
          {{"soc", m.violations.soc},
           {"t_cl", m.violations.t_cl},
           {"t_cat", m.violations.t_cat},
           {"soc_worst", m.violations.soc_worst},
           {"t_cl_worst", m.violations.t_cl_worst},
           {"t_cat_worst", m.violations.t_cat_worst}}}};
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

TripMetrics load_metrics_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  TripMetrics m;
  try {
    m.fuel_total_kg = j.at("fuel_total_kg").get<double>();
    m.engine_on_ratio = j.at("engine_on_ratio").get<double>();
    m.soc_terminal_dev = j.at("soc_terminal_dev").get<double>();
    m.steps = j.at("steps").get<int>();
    m.soft_steps = j.at("soft_steps").get<int>();
    m.fallback_steps = j.at("fallback_steps").get<int>();
    m.wall_mean_sec = j.at("wall_mean_sec").get<double>();
    m.wall_max_sec = j.at("wall_max_sec").get<double>();
    const json& v = j.at("violations");
    m.violations.soc = v.at("soc").get<int>();
    m.violations.t_cl = v.at("t_cl").get<int>();
    m.violations.t_cat = v.at("t_cat").get<int>();
    m.violations.soc_worst = v.at("soc_worst").get<double>();
    m.violations.t_cl_worst = v.at("t_cl_worst").get<double>();
    m.violations.t_cat_worst = v.at("t_cat_worst").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return m;
}

void save_comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ParseError("cannot open " + path + " for writing");
  std::fputs(
      "case,fuel_kg,fuel_delta_pct,engine_on_ratio,on_ratio_delta_pct,soc_terminal_dev,"
      "hard_violations,soft_steps,fallback_steps\n",
      f);
  for (const ComparisonRow& r : rows) {
    std::fprintf(f, "%s,%.10g,%.10g,%.10g,%.10g,%.10g,%d,%d,%d\n", r.summary.label.c_str(),
                 r.summary.fuel_kg, r.fuel_delta_pct, r.summary.engine_on_ratio,
                 r.on_ratio_delta_pct, r.summary.soc_terminal_dev, r.summary.hard_violations,
                 r.summary.soft_steps, r.summary.fallback_steps);
  }
  std::fclose(f);
}

}  // namespace hev
