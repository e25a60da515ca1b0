#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "hev/interp.hpp"

namespace hev {

constexpr double kGravity = 9.81;  // m/s^2

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Plant state: battery charge fraction plus the two slow thermal states.
struct VehicleState {
  double soc = 0.6;
  double t_cl = 50.0;   // coolant temperature, C
  double t_cat = 250.0; // catalyst brick temperature, C
  bool engine_on = false;
};

struct Control {
  double p_bat = 0.0;  // total battery electric power, W (discharge > 0)
  bool engine_on = false;
};

struct BatteryParams {
  double c_bat = 23400.0;  // A*s (6.5 Ah)
  double r_int = 0.1;      // ohm
  double u_oc_const = 200.0;
  // optional SOC-indexed open-circuit voltage; empty means constant u_oc_const
  Eigen::VectorXd u_oc_soc_knots;
  Eigen::VectorXd u_oc_values;
  double p_bat_min = -30e3;
  double p_bat_max = 40e3;

  double u_oc(double soc) const {
    if (u_oc_soc_knots.size() == 0) return u_oc_const;
    return lerp_series(u_oc_soc_knots, u_oc_values, soc);
  }
  double du_oc_dsoc(double soc) const {
    if (u_oc_soc_knots.size() == 0) return 0.0;
    const double h = 1e-4;
    return (u_oc(soc + h) - u_oc(soc - h)) / (2.0 * h);
  }
  void validate() const {
    if (r_int <= 0.0 || c_bat <= 0.0) throw ModelError("battery: r_int and c_bat must be positive");
    double u_min = u_oc_const;
    for (Eigen::Index i = 0; i < u_oc_values.size(); ++i) u_min = std::min(u_min, u_oc_values[i]);
    if (u_min <= 0.0) throw ModelError("battery: u_oc must be positive");
    if (p_bat_max > u_min * u_min / (4.0 * r_int))
      throw ModelError("battery: p_bat_max exceeds u_oc^2/(4 r_int)");
  }
};

// Engine surrogate: operating line (speed over power) and a Willans-style
// tabulated efficiency curve. Torque is recovered as p/omega so that
// omega*tau == p holds identically at every query point.
struct EngineParams {
  double p_max = 60e3;
  double eps_on = 100.0;  // W; engine counts as "on" above this power
  Eigen::VectorXd ool_p_knots{{0.0, 5e3, 10e3, 15e3, 20e3, 25e3, 30e3, 40e3, 50e3, 60e3}};
  Eigen::VectorXd ool_omega_knots{{100.0, 120.0, 145.0, 170.0, 195.0, 220.0, 245.0, 290.0, 330.0, 365.0}};
  Eigen::VectorXd eta_p_knots{{1e3, 3e3, 5e3, 10e3, 15e3, 20e3, 30e3, 40e3, 50e3, 60e3}};
  Eigen::VectorXd eta_knots{{0.10, 0.17, 0.22, 0.28, 0.315, 0.34, 0.36, 0.355, 0.345, 0.33}};

  void build() {
    ool_ = MonotoneCubic(ool_p_knots, ool_omega_knots);
    eta_ = MonotoneCubic(eta_p_knots, eta_knots);
  }
  bool built() const { return ool_.knots_x().size() > 0; }

  const MonotoneCubic& ool() const { return ool_; }
  const MonotoneCubic& eta() const { return eta_; }

 private:
  MonotoneCubic ool_, eta_;
};

struct EngineThermalParams {
  double thermal_mass = 80.0;      // kg
  double thermal_capacity = 1900.0;  // J/(kg C)
  double lhv = 44.0e6;             // J/kg
  double q_exh_fraction = 0.3;
  double q_air_coeff = 30.0;       // W/C, closed-thermostat convection
  double t_thermostat = 87.0;      // C; radiator loop opens above this
  double q_air_thermostat = 25e3;  // W/C extra conductance once open
  double q_heat_demand = 3000.0;   // W cabin heating draw
  bool heating_enabled = true;
  double t_amb = 0.0;              // C

  void validate() const {
    if (thermal_mass <= 0 || thermal_capacity <= 0 || lhv <= 0 || q_air_coeff <= 0 ||
        q_heat_demand < 0)
      throw ModelError("engine_thermal: parameters must be positive");
    if (q_exh_fraction <= 0.0 || q_exh_fraction >= 1.0)
      throw ModelError("engine_thermal: q_exh_fraction must be in (0,1)");
  }
};

struct CatalystParams {
  // engine-on polynomial coefficients
  double a1 = -1.6065e-2;
  double a2 = -1.8535e-06;
  double a3 = 9.8852e-3;
  double a4 = -8.2564e-05;
  double a5 = 5.1029e-3;
  double a6 = -1.6444e-4;
  double a7 = 1.5473e-6;
  double a8 = 6.8078;
  // engine-off cooldown
  double b1 = -1.00e-3;  // 1/s
  double b2 = -0.200;    // C/s
  double t_amb = 0.0;    // C
  double light_off = 250.0;

  void validate() const {
    if (b1 >= 0.0 || b2 >= 0.0) throw ModelError("catalyst: b1 and b2 must be negative");
    if (light_off <= t_amb) throw ModelError("catalyst: light_off must exceed t_amb");
  }
};

struct RoadLoadParams {
  double mass = 1500.0;           // kg
  double rolling_coeff = 0.01;
  double drag_area_coeff = 0.4;   // kg/m, lumped 0.5*rho*Cd*A
  double p_bat_aux = 300.0;       // W constant electrical accessory load

  void validate() const {
    if (mass < 0 || rolling_coeff < 0 || drag_area_coeff < 0 || p_bat_aux < 0)
      throw ModelError("road_load: parameters must be non-negative");
  }
};

struct EnginePoint {
  double omega = 0.0;  // rad/s
  double tau = 0.0;    // N*m
  double p = 0.0;      // W, == omega*tau
};

// ---------------------------------------------------------------------------
// power balance

inline double traction_power(double v, double a, const RoadLoadParams& r) {
  return (r.mass * a + r.mass * kGravity * r.rolling_coeff + r.drag_area_coeff * v * v) * v;
}

// Engine power implied by the chosen battery power. Negative demand is
// clamped to zero; the surplus is the caller's regen/brake bookkeeping.
inline double power_split(double p_trac, double p_bat, double p_bat_aux) {
  return std::max(0.0, p_trac - (p_bat - p_bat_aux));
}

inline bool split_feasible(double p_eng, const EngineParams& e) { return p_eng <= e.p_max; }

// ---------------------------------------------------------------------------
// engine on/off gate
//
// Smoothstep ramp over [0, eps_on]: exactly 0 at p<=0, exactly 1 at
// p>=eps_on, C1 in between. Both the plant (evaluated at commanded powers,
// always outside the ramp) and the transcription (which needs a smooth
// relaxation of the switch) use the same function.

inline double on_gate(double p_eng, double eps_on) {
  if (p_eng <= 0.0) return 0.0;
  if (p_eng >= eps_on) return 1.0;
  const double u = p_eng / eps_on;
  return u * u * (3.0 - 2.0 * u);
}

inline double on_gate_dp(double p_eng, double eps_on) {
  if (p_eng <= 0.0 || p_eng >= eps_on) return 0.0;
  const double u = p_eng / eps_on;
  return 6.0 * u * (1.0 - u) / eps_on;
}

// ---------------------------------------------------------------------------
// battery SOC dynamics
//
// Sign convention: positive p_bat (discharge) decreases SOC.

inline double soc_rate(double soc, double p_bat, const BatteryParams& b) {
  const double u = b.u_oc(soc);
  const double disc = u * u - 4.0 * b.r_int * p_bat;
  if (disc < 0.0) throw ModelError("soc_rate: battery power beyond physical limit");
  return -(u - std::sqrt(disc)) / (2.0 * b.r_int * b.c_bat);
}

struct SocRateDeriv {
  double d_soc = 0.0;
  double d_pbat = 0.0;
};

inline SocRateDeriv soc_rate_deriv(double soc, double p_bat, const BatteryParams& b) {
  const double u = b.u_oc(soc);
  const double disc = u * u - 4.0 * b.r_int * p_bat;
  if (disc <= 0.0) throw ModelError("soc_rate_deriv: at or beyond discriminant boundary");
  const double s = std::sqrt(disc);
  SocRateDeriv d;
  d.d_pbat = -1.0 / (b.c_bat * s);
  const double du = b.du_oc_dsoc(soc);
  d.d_soc = -du * (1.0 - u / s) / (2.0 * b.r_int * b.c_bat);
  return d;
}

// ---------------------------------------------------------------------------
// engine operating point and fuel

inline EnginePoint ool_lookup(double p_eng, const EngineParams& e) {
  if (p_eng <= 0.0) return {0.0, 0.0, 0.0};
  if (p_eng > e.p_max) throw ModelError("ool_lookup: power above engine limit");
  EnginePoint pt;
  pt.p = p_eng;
  pt.omega = e.ool()(p_eng);
  pt.tau = p_eng / pt.omega;
  return pt;
}

struct OolDeriv {
  double domega_dp = 0.0;
  double dtau_dp = 0.0;
};

inline OolDeriv ool_deriv(double p_eng, const EngineParams& e) {
  OolDeriv d;
  if (p_eng <= 0.0 || p_eng > e.p_max) return d;
  const auto [w, dw] = e.ool().eval(p_eng);
  d.domega_dp = dw;
  d.dtau_dp = (w - p_eng * dw) / (w * w);
  return d;
}

// Cold-operation fuel penalty multiplier; piecewise linear from 1.3 at -10 C
// down to 1.0 at 60 C, flat outside.
inline double alpha_tcl(double t_cl) {
  if (t_cl >= 60.0) return 1.0;
  if (t_cl <= -10.0) return 1.3;
  return 1.0 + (60.0 - t_cl) * (0.3 / 70.0);
}

inline double alpha_tcl_deriv(double t_cl) {
  if (t_cl >= 60.0 || t_cl <= -10.0) return 0.0;
  return -0.3 / 70.0;
}

// Nominal (warm) fuel mass rate along the operating line, kg/s.
inline double fuel_nominal(double p_eng, const EngineParams& e, const EngineThermalParams& th) {
  if (p_eng <= 0.0) return 0.0;
  return p_eng / (e.eta()(p_eng) * th.lhv);
}

inline double fuel_nominal_dp(double p_eng, const EngineParams& e, const EngineThermalParams& th) {
  if (p_eng <= 0.0) return 0.0;
  const auto [eta, deta] = e.eta().eval(p_eng);
  return (eta - p_eng * deta) / (eta * eta * th.lhv);
}

// Fuel rate at an engine point; zero when the point is off (p == 0).
inline double fuel_rate(const EnginePoint& pt, double t_cl, const EngineParams& e,
                        const EngineThermalParams& th) {
  return alpha_tcl(t_cl) * fuel_nominal(pt.p, e, th);
}

// Gated variant used by the transcription; g in [0,1].
inline double fuel_rate_gated(double p_eng, double t_cl, double g, const EngineParams& e,
                              const EngineThermalParams& th) {
  return g * alpha_tcl(t_cl) * fuel_nominal(std::max(0.0, p_eng), e, th);
}

// ---------------------------------------------------------------------------
// coolant thermal dynamics

inline double q_air_flow(double t_cl, const EngineThermalParams& th) {
  double q = th.q_air_coeff * (t_cl - th.t_amb);
  if (t_cl > th.t_thermostat) q += th.q_air_thermostat * (t_cl - th.t_thermostat);
  return q;
}

inline double q_air_flow_dt(double t_cl, const EngineThermalParams& th) {
  double dq = th.q_air_coeff;
  if (t_cl > th.t_thermostat) dq += th.q_air_thermostat;
  return dq;
}

// g scales the engine-driven heat flows (fuel heat, shaft power, exhaust);
// convection and cabin draw are always active.
inline double coolant_rate_gated(double t_cl, double p_eng, double g, const EngineParams& e,
                                 const EngineThermalParams& th) {
  const double mdot = fuel_rate_gated(p_eng, t_cl, g, e, th);
  const double q_fuel = th.lhv * mdot;
  const double q_exh = th.q_exh_fraction * q_fuel;
  const double q_heat = th.heating_enabled ? th.q_heat_demand : 0.0;
  const double p_shaft = g * std::max(0.0, p_eng);
  return (q_fuel - p_shaft - q_exh - q_air_flow(t_cl, th) - q_heat) /
         (th.thermal_mass * th.thermal_capacity);
}

inline double coolant_rate(double t_cl, const EnginePoint& pt, const EngineParams& e,
                           const EngineThermalParams& th) {
  return coolant_rate_gated(t_cl, pt.p, pt.p > 0.0 ? 1.0 : 0.0, e, th);
}

struct CoolantRateDeriv {
  double d_tcl = 0.0;
  double d_peng = 0.0;  // through the gate as well
};

inline CoolantRateDeriv coolant_rate_deriv(double t_cl, double p_eng, double g, double dg,
                                           const EngineParams& e, const EngineThermalParams& th) {
  const double mc = th.thermal_mass * th.thermal_capacity;
  const double pp = std::max(0.0, p_eng);
  const double f = fuel_nominal(pp, e, th);
  const double df = fuel_nominal_dp(pp, e, th);
  const double al = alpha_tcl(t_cl);
  const double dal = alpha_tcl_deriv(t_cl);
  const double net_frac = (1.0 - th.q_exh_fraction) * th.lhv;
  CoolantRateDeriv d;
  d.d_tcl = (net_frac * g * dal * f - q_air_flow_dt(t_cl, th)) / mc;
  const double dq_engine = net_frac * (dg * al * f + g * al * df) - (dg * pp + g * (p_eng > 0.0 ? 1.0 : 0.0));
  d.d_peng = dq_engine / mc;
  return d;
}

// ---------------------------------------------------------------------------
// catalyst thermal dynamics (switching model)

inline double catalyst_rate_on(double t_cat, double v, double omega, double tau,
                               const CatalystParams& c) {
  return (c.a1 + c.a2 * v) * (t_cat - c.t_amb) + c.a3 * omega + c.a4 * omega * omega +
         c.a5 * tau + c.a6 * tau * tau + c.a7 * omega * omega * tau + c.a8;
}

inline double catalyst_rate_off(double t_cat, const CatalystParams& c) {
  return c.b1 * (t_cat - c.t_amb) + c.b2;
}

inline double catalyst_rate(double t_cat, double v, const EnginePoint& pt, bool engine_on,
                            const CatalystParams& c) {
  return engine_on ? catalyst_rate_on(t_cat, v, pt.omega, pt.tau, c)
                   : catalyst_rate_off(t_cat, c);
}

inline double catalyst_rate_gated(double t_cat, double v, double omega, double tau, double g,
                                  const CatalystParams& c) {
  return g * catalyst_rate_on(t_cat, v, omega, tau, c) + (1.0 - g) * catalyst_rate_off(t_cat, c);
}

struct CatalystRateDeriv {
  double d_tcat = 0.0;
  double d_omega = 0.0;
  double d_tau = 0.0;
};

inline CatalystRateDeriv catalyst_rate_deriv(double /*t_cat*/, double v, double omega, double tau,
                                             double g, const CatalystParams& c) {
  CatalystRateDeriv d;
  d.d_tcat = g * (c.a1 + c.a2 * v) + (1.0 - g) * c.b1;
  d.d_omega = g * (c.a3 + 2.0 * c.a4 * omega + 2.0 * c.a7 * omega * tau);
  d.d_tau = g * (c.a5 + 2.0 * c.a6 * tau + c.a7 * omega * omega);
  return d;
}

// ---------------------------------------------------------------------------
// plant integration

struct PlantParams {
  BatteryParams battery;
  EngineParams engine;
  EngineThermalParams thermal;
  CatalystParams catalyst;
  RoadLoadParams road;

  void validate() const {
    battery.validate();
    thermal.validate();
    catalyst.validate();
    road.validate();
  }
};

// One forward-Euler step of (soc, t_cl, t_cat) under the given control and
// driving condition. engine_on is taken from the control.
inline VehicleState integrate_step(const VehicleState& s, const Control& u, double v, double a,
                                   double dt, const PlantParams& p) {
  const double p_trac = traction_power(v, a, p.road);
  const double p_eng = u.engine_on ? power_split(p_trac, u.p_bat, p.road.p_bat_aux) : 0.0;
  const EnginePoint pt = u.engine_on ? ool_lookup(std::min(p_eng, p.engine.p_max), p.engine)
                                     : EnginePoint{};
  VehicleState n;
  n.soc = s.soc + dt * soc_rate(s.soc, u.p_bat, p.battery);
  n.t_cl = s.t_cl + dt * coolant_rate(s.t_cl, pt, p.engine, p.thermal);
  n.t_cat = s.t_cat + dt * catalyst_rate(s.t_cat, v, pt, u.engine_on, p.catalyst);
  n.engine_on = u.engine_on;
  return n;
}

}  // namespace hev
