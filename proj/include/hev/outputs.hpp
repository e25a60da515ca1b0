#pragma once

#include <string>
#include <vector>

#include "hev/closed_loop.hpp"

namespace hev {

void save_trajectory_csv(const TrajectoryLog& log, const std::string& path);

void save_metrics_json(const TripMetrics& m, const std::string& path);
TripMetrics load_metrics_json(const std::string& path);

void save_comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& path);

}  // namespace hev
