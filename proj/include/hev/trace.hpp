#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace hev {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Time-stamped speed trajectory. Positions are cumulative trapezoidal
// integrals of speed unless the source file carried an x column.
struct DriveTrace {
  Eigen::VectorXd t;  // s, strictly increasing
  Eigen::VectorXd v;  // m/s, >= 0
  Eigen::VectorXd x;  // m, non-decreasing
  std::string route_id;
  std::string vehicle_id;

  Eigen::Index size() const { return t.size(); }
  double duration() const { return t.size() ? t[t.size() - 1] - t[0] : 0.0; }
  double start_time() const { return t.size() ? t[0] : 0.0; }
  double end_time() const { return t.size() ? t[t.size() - 1] : 0.0; }

  double speed_at(double tq) const;     // linear interpolation, clamped
  double position_at(double tq) const;  // linear interpolation, clamped

  // t strictly increasing, v >= 0, x non-decreasing and within 1% of the
  // trapezoidal integral of v (relative to trip length)
  void validate() const;
};

Eigen::VectorXd cumulative_trapezoid(const Eigen::VectorXd& t, const Eigen::VectorXd& v);

// CSV with header t_sec,v_mps[,x_m]; positions reconstructed when absent.
DriveTrace load_trace(const std::string& path);
void save_trace(const DriveTrace& trace, const std::string& path);

}  // namespace hev
