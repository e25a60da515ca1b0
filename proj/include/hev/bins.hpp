#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "hev/corridor.hpp"
#include "hev/trace.hpp"

namespace hev {

// Trip-relative binned speed statistics for one arrival-phase bin.
struct BinProfile {
  int bin = 0;             // 1-based
  Eigen::VectorXd tau;     // s since trip start, uniform dt2 grid
  Eigen::VectorXd mean_v;  // m/s
  Eigen::VectorXd std_v;   // population std, m/s
  int support = 0;         // trips aggregated into this bin
  // mean duration of the support trips; the zero-padded speed average stays
  // nonzero until the longest trip ends, so the profile alone overstates
  // how long a typical trip in the bin lasts
  double mean_duration = 0.0;

  bool usable() const { return support > 0; }
};

// Absolute time at which the trace first crosses position x, by linear
// interpolation between samples. Throws ParseError if it never does.
double crossing_time(const DriveTrace& trace, double x);

// Phase bin at the first intersection: elapsed time since the most recent
// red onset there, split into n_bins equal slices of the cycle. 1-based.
int classify_trip(const DriveTrace& trace, const CorridorConfig& cfg);

// Pointwise mean/std of trip-relative speed on a dt2 grid spanning
// [0, horizon]. Trips shorter than the grid are padded with v = 0
// (vehicle has parked).
std::vector<BinProfile> aggregate_bins(const std::vector<DriveTrace>& traces,
                                       const std::vector<int>& bins, const CorridorConfig& cfg,
                                       double dt2, double horizon);

void save_bins_csv(const std::vector<BinProfile>& profiles, const std::string& path);
std::vector<BinProfile> load_bins_csv(const std::string& path);

}  // namespace hev
