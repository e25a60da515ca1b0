#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "hev/models.hpp"

namespace hev {

struct DpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DpAxis {
  double lo = 0.0, hi = 1.0;
  int n = 2;
  double step() const { return (hi - lo) / (n - 1); }
};

// Dynamic-programming reference for short instances: backward value
// iteration over a dense (soc, t_cl, t_cat) grid with trilinear
// interpolation and a uniform battery-power control grid. Intended as a
// near-optimal benchmark, not a production controller.
struct DpProblem {
  PlantParams plant;  // engine tables must be built
  Eigen::VectorXd v, a, dt;  // driving condition per step

  double soc_min = 0.4, soc_max = 0.8;
  double t_cl_min = 40.0, t_cl_max = 90.0;
  double t_cat_min = 250.0;
  bool t_cat_conditional = true;  // enforce only once the brick is lit

  double terminal_soc_lo = 0.594, terminal_soc_hi = 0.606;

  DpAxis grid_soc{0.4, 0.8, 41};
  DpAxis grid_t_cl{30.0, 95.0, 31};
  DpAxis grid_t_cat{0.0, 600.0, 31};
  int n_controls = 21;
  long max_cells_times_controls = 1'000'000;  // desk-scale guard

  int n_steps() const { return static_cast<int>(v.size()); }
  void validate() const;
};

struct DpResult {
  bool feasible = false;
  double fuel_kg = 0.0;             // fuel of the replayed control sequence
  double value_at_start = 0.0;      // interpolated cost-to-go at x0
  Eigen::VectorXd p_bat;            // chosen controls, size N
  std::vector<VehicleState> states; // N+1 states including x0
};

DpResult dp_oracle(const DpProblem& pb, const VehicleState& x0);

}  // namespace hev
