#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hev/trace.hpp"

namespace hev {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Intersection {
  double position = 0.0;       // m from corridor start
  double cycle = 100.0;        // s, common across the corridor
  double green_start = 0.0;    // s offset within the cycle
  double green_duration = 45.0;
};

// Signalized arterial corridor. All intersections share one cycle length;
// offsets differ (coordinated signals).
struct CorridorConfig {
  std::vector<Intersection> intersections;
  double speed_limit = 17.0;  // m/s
  double length = 3540.0;     // m
  double a_max = 2.0;         // m/s^2 comfort accel bound
  int n_bins = 10;

  void validate() const;
  double cycle() const { return intersections.empty() ? 100.0 : intersections[0].cycle; }
};

CorridorConfig default_corridor();

bool is_green(const Intersection& s, double t);
// first instant >= t at which the signal shows green
double next_green_onset(const Intersection& s, double t);
// within-cycle time at which the signal turns red
double red_onset(const Intersection& s);

// Piecewise-constant-acceleration motion profile. Used by both the traffic
// generator and the eco planner; sampling it on a uniform grid yields a
// DriveTrace whose positions match trapezoidal integration of the sampled
// speeds up to O(dt^2) per acceleration breakpoint.
class MotionProfile {
 public:
  void append(double a, double duration);
  void append_hold(double duration) { append(0.0, duration); }

  double t_start() const { return t0_; }
  double t_end() const;
  double x_end() const;
  double v_end() const;
  void reset(double t0, double x0, double v0);

  void state_at(double t, double& x, double& v) const;
  DriveTrace sample(double dt, const std::string& vehicle_id, const std::string& route_id) const;

 private:
  struct Segment {
    double t, x, v, a, dur;
  };
  std::vector<Segment> segs_;
  double t0_ = 0.0, x0_ = 0.0, v0_ = 0.0;
};

// Append ramp+cruise segments taking the profile's end state to position x,
// holding cruise speed once reached.
void advance_to(MotionProfile& p, double x, double cruise, double a_max);
// Append accel/cruise/brake segments that bring the profile to rest at x.
void stop_at(MotionProfile& p, double x, double cruise, double a_max);

// Kinematic corridor traffic: each vehicle departs at a random offset,
// cruises at a jittered fraction of the speed limit, brakes for red signals,
// waits for green, and accelerates back. No car-following.
std::vector<DriveTrace> generate_corridor_traffic(const CorridorConfig& cfg, int n_vehicles,
                                                  std::uint64_t seed);

// Single-vehicle variant with explicit departure time and cruise speed.
DriveTrace generate_vehicle_trace(const CorridorConfig& cfg, double depart_t, double cruise_speed,
                                  const std::string& vehicle_id);

}  // namespace hev
