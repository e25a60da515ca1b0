#pragma once

#include <Eigen/Dense>

#include <stdexcept>

#include "hev/bins.hpp"
#include "hev/trace.hpp"

namespace hev {

struct PreviewError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Uniformly sampled speed profile on trip-relative time, linear between
// samples and held constant outside.
struct SampledProfile {
  double t0 = 0.0;
  double dt = 1.0;
  Eigen::VectorXd v;

  double value_at(double t) const;
  double end_time() const { return t0 + (v.size() > 0 ? (v.size() - 1) * dt : 0.0); }
};

SampledProfile profile_from_bin(const BinProfile& bin, double trip_start);
SampledProfile profile_from_trace(const DriveTrace& trace, double dt);

// Two-resolution speed preview handed to the controller: h_short exact
// samples at dt1 starting at t_now, then h_long statistical samples at dt2
// out to the estimated trip end.
struct SpeedPreview {
  double t_now = 0.0;
  double t_end = 0.0;
  double dt1 = 1.0;
  double dt2 = 10.0;
  double v_prev = 0.0;              // speed one dt1 before t_now, for accel
  double v_long_prev = 0.0;         // tail speed one dt2 before the coarse segment
  Eigen::VectorXd v_short;          // speeds at t_now + i*dt1, i = 0..h_short
  Eigen::VectorXd v_long;           // speeds at the dt2 tail nodes

  int h_short() const { return static_cast<int>(v_short.size()) - 1; }
  int h_long() const { return static_cast<int>(v_long.size()); }
  double covered() const { return h_short() * dt1 + h_long() * dt2; }
};

// Assemble the preview. Short speeds come from the exact trace; long speeds
// from `tail` (a bin mean in statistical mode, a resampled copy of the truth
// in exact mode). Requires t_now + h_r*dt1 <= t_end; the dt2 tail tiles the
// remainder, overrunning t_end by less than dt2.
SpeedPreview build_preview(const DriveTrace& trace, const SampledProfile& tail, double t_now,
                           int h_r, double dt1, double dt2, double t_end);

// Trip duration implied by a bin profile: first grid point from which the
// mean speed stays below v_eps to the end of the grid.
double estimate_duration(const BinProfile& bin, double v_eps = 0.3);

// Mean of the profile's grid samples between t_a and t_prof_end, the pace
// the tail claims for the rest of the trip. Falls back to the point value
// at t_a when no grid sample lies inside.
double remaining_mean_speed(const SampledProfile& p, double t_a, double t_prof_end);

// Refresh an end-time estimate from remaining distance over a mean pace:
// t_end = t_now + (x_total - x_now) / v_mean.
double reestimate_t_end(double t_now, double x_now, double x_total, double v_mean,
                        double v_floor = 1.0);

// Position-matched end-time estimate: walk the profile's cumulative distance
// backward from its sustained-zero instant t_prof_end until x_remaining is
// covered; what is left of the profile is the time left. Dividing remaining
// length by a remaining-mean pace is the same thing for a flat profile but
// diverges once the remainder is mostly the final stop. If the profile is
// too short for x_remaining, the overflow is extrapolated at the profile's
// overall pace (floored at v_floor).
double reestimate_t_end_from_profile(const SampledProfile& p, double t_prof_end, double t_now,
                                     double x_remaining, double v_floor = 1.0);

}  // namespace hev
