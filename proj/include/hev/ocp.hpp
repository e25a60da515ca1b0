#pragma once

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <vector>

#include "hev/models.hpp"
#include "hev/nlp.hpp"
#include "hev/preview.hpp"

namespace hev {

struct OcpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OcpBounds {
  double soc_min = 0.4, soc_max = 0.8;
  double t_cl_min = 40.0, t_cl_max = 90.0;
  double t_cat_min = 250.0;
};

struct OcpSpec {
  VehicleState x0;
  SpeedPreview preview;
  OcpBounds bounds;
  double soc_init = 0.6;  // trip-start SOC anchoring the terminal band
  double term_lo_frac = 0.99;
  double term_hi_frac = 1.01;
  bool soft_thermal = false;   // thermal bounds as quadratic penalty, SOC stays hard
  double soft_weight = 1e4;    // objective units per squared deg C
};

// Node-wise driving condition: speed at the node start, accel held over the
// node, duration. Accel is the backward difference of the speed samples,
// matching how the plant loop computes traction, so the applied first move
// sees no model mismatch.
struct OcpNodes {
  Eigen::VectorXd v, a, d;
  int n() const { return static_cast<int>(v.size()); }
};

OcpNodes ocp_nodes_from_preview(const SpeedPreview& pv);

// Single-shooting transcription: decision vector is battery power per node
// (scaled), states eliminated by forward Euler, objective is fuel mass,
// inequality constraints are the state path bounds and the terminal SOC
// band. Gradients come from a hand-coded reverse (adjoint) sweep; the
// weighted-constraint-gradient callback pushes all multipliers through one
// sweep instead of forming a Jacobian.
class OcpTranscription {
 public:
  static constexpr double kPowerScale = 1e4;  // W per z unit
  static constexpr double kObjScale = 1e3;    // kg -> objective units (g)
  static constexpr double kTempScale = 1e-2;  // deg C -> constraint units

  OcpTranscription(const OcpSpec& spec, const PlantParams& plant);

  const NlpProblem& nlp() const { return nlp_; }
  int n_nodes() const;
  const OcpNodes& nodes() const;
  bool t_cat_constraint_active() const;

  double p_from_z(double z) const { return z * kPowerScale; }
  double z_from_p(double p) const { return p / kPowerScale; }

  Eigen::VectorXd initial_guess() const;  // all-EV guess projected into the box
  double fuel_kg(const Eigen::VectorXd& z) const;
  std::vector<VehicleState> states(const Eigen::VectorXd& z) const;
  double traction_at(int node) const;

 private:
  struct Work;
  std::shared_ptr<Work> w_;
  NlpProblem nlp_;
};

}  // namespace hev
