#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "hev/corridor.hpp"
#include "hev/trace.hpp"

namespace hev {

struct PlanError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EcoOptions {
  double v_min = 3.0;          // m/s, slowest glide speed considered
  double margin = 1.0;         // s, keep-out from green window edges
  int max_windows = 3;         // green windows searched per intersection
  double accel_weight = 1.0;   // weight on specific kinetic energy rebought
  // weight on trip time, in per-mass watts. Roughly aux draw plus cold idle
  // fuel over vehicle mass; without it the search crawls into far-future
  // windows because waiting is free.
  double time_weight = 2.0;
  // cruise ceiling in m/s; 0 means the corridor speed limit. Set to the
  // driver's usual cruise speed when replanning an observed trip so the
  // plan does not trade stops for extra drag.
  double v_cruise_cap = 0.0;
};

// Plan a speed trajectory through the corridor that crosses every
// intersection during green, preferring glides over stops. Searches up to
// max_windows upcoming green windows per intersection and picks the chain
// minimizing positive-acceleration work. Throws PlanError when no feasible
// chain exists.
DriveTrace plan_eco_trajectory(const CorridorConfig& cfg, double depart_t,
                               const EcoOptions& opts = {},
                               const std::string& vehicle_id = "eco");

}  // namespace hev
