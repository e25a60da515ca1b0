#pragma once

#include <string>
#include <vector>

#include "hev/bins.hpp"
#include "hev/config.hpp"
#include "hev/nlp.hpp"
#include "hev/trace.hpp"

namespace hev {

// One control tick: the state and driving condition seen at t, the decision
// taken, and the cumulative fuel after integrating to t + dt1.
struct StepRecord {
  double t = 0.0;
  double v = 0.0;
  double p_trac = 0.0;
  double p_bat = 0.0;
  double p_eng = 0.0;
  bool engine_on = false;
  double soc = 0.0;   // state at t, before the step
  double t_cl = 0.0;
  double t_cat = 0.0;
  double fuel_cum_kg = 0.0;
  SolveStatus status = SolveStatus::kOptimal;
  bool fallback = false;
  bool soft = false;
  int iterations = 0;
  double wall_sec = 0.0;
};

struct TrajectoryLog {
  double dt1 = 1.0;
  double soc_init = 0.6;  // anchor for the terminal band
  VehicleState x0;
  VehicleState x_final;
  std::vector<StepRecord> steps;
};

// Drive the plant along the trace under the configured controller. For
// binned preview the coarse tail comes from `bin` and the trip end is the
// bin's estimate, refreshed from remaining distance each step and replaced
// by the true end once within one long step of it.
TrajectoryLog run_closed_loop(const AppConfig& cfg, const DriveTrace& trace,
                              const BinProfile* bin = nullptr);

struct ViolationStats {
  int soc = 0;
  int t_cl = 0;
  int t_cat = 0;
  double soc_worst = 0.0;    // largest excursion beyond the bound, raw units
  double t_cl_worst = 0.0;
  double t_cat_worst = 0.0;

  int total() const { return soc + t_cl + t_cat; }
};

struct TripMetrics {
  double fuel_total_kg = 0.0;
  double engine_on_ratio = 0.0;
  double soc_terminal_dev = 0.0;  // soc_end / soc_init - 1
  ViolationStats violations;      // beyond tolerance (1e-6 SOC, 0.5 C thermal)
  int steps = 0;
  int soft_steps = 0;
  int fallback_steps = 0;
  double wall_mean_sec = 0.0;
  double wall_max_sec = 0.0;
};

TripMetrics compute_metrics(const TrajectoryLog& log, const AppConfig& cfg);

struct CaseSummary {
  std::string label;
  double fuel_kg = 0.0;            // corpus mean
  double engine_on_ratio = 0.0;    // corpus mean
  double soc_terminal_dev = 0.0;   // corpus mean
  int hard_violations = 0;         // summed over the corpus
  int soft_steps = 0;
  int fallback_steps = 0;
};

struct ComparisonRow {
  CaseSummary summary;
  double fuel_delta_pct = 0.0;      // vs the baseline row
  double on_ratio_delta_pct = 0.0;
};

// Percent deltas against the baseline entry (default: first row).
std::vector<ComparisonRow> compare_cases(const std::vector<CaseSummary>& cases,
                                         std::size_t baseline = 0);

}  // namespace hev
