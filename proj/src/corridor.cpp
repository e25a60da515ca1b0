#include "hev/corridor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace hev {

namespace {

constexpr double kStopGap = 1.25;  // m between stop point and the signal line
constexpr double kTiny = 1e-9;

double canonical(std::mt19937_64& rng) {
  // 53-bit mantissa uniform in [0,1); avoids libstdc++/libc++ divergence in
  // std::uniform_real_distribution
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

void CorridorConfig::validate() const {
  if (intersections.empty()) throw ConfigError("corridor: at least one intersection required");
  if (speed_limit <= 0) throw ConfigError("corridor: speed_limit must be positive");
  if (a_max <= 0) throw ConfigError("corridor: a_max must be positive");
  if (n_bins < 1) throw ConfigError("corridor: n_bins must be >= 1");
  const double cyc = intersections[0].cycle;
  double prev = 0.0;
  for (std::size_t i = 0; i < intersections.size(); ++i) {
    const auto& s = intersections[i];
    if (s.position <= prev)
      throw ConfigError("corridor: intersection positions must be strictly increasing and > 0");
    prev = s.position;
    if (s.cycle != cyc)
      throw ConfigError("corridor: all intersections must share one cycle length");
    if (s.cycle <= 0) throw ConfigError("corridor: cycle must be positive");
    if (s.green_start < 0 || s.green_start >= s.cycle)
      throw ConfigError("corridor: green_start must lie in [0, cycle)");
    if (s.green_duration <= 0 || s.green_duration >= s.cycle)
      throw ConfigError("corridor: green_duration must lie in (0, cycle)");
  }
  if (length <= prev) throw ConfigError("corridor: length must exceed the last intersection");
}

CorridorConfig default_corridor() {
  CorridorConfig cfg;
  // loosely coordinated arterial: offsets roughly follow a 15 m/s wave with
  // per-signal deviations large enough that a cruising vehicle misses one or
  // two greens per trip
  const double pos[] = {400, 950, 1500, 2100, 2700, 3200};
  const double gs[] = {55, 10, 12, 80, 12, 18};
  for (int i = 0; i < 6; ++i) cfg.intersections.push_back({pos[i], 100.0, gs[i], 45.0});
  return cfg;
}

bool is_green(const Intersection& s, double t) {
  double ph = std::fmod(t, s.cycle);
  if (ph < 0) ph += s.cycle;
  const double ge = s.green_start + s.green_duration;
  if (ge <= s.cycle) return ph >= s.green_start && ph < ge;
  return ph >= s.green_start || ph < ge - s.cycle;
}

double next_green_onset(const Intersection& s, double t) {
  if (is_green(s, t)) return t;
  double ph = std::fmod(t, s.cycle);
  if (ph < 0) ph += s.cycle;
  const double delta = ph < s.green_start ? s.green_start - ph : s.cycle - ph + s.green_start;
  return t + delta;
}

double red_onset(const Intersection& s) {
  return std::fmod(s.green_start + s.green_duration, s.cycle);
}

void MotionProfile::reset(double t0, double x0, double v0) {
  segs_.clear();
  t0_ = t0;
  x0_ = x0;
  v0_ = v0;
}

void MotionProfile::append(double a, double duration) {
  if (duration < kTiny) return;
  Segment s{t0_, x0_, v0_, a, duration};
  if (!segs_.empty()) {
    const Segment& p = segs_.back();
    s.t = p.t + p.dur;
    s.x = p.x + p.v * p.dur + 0.5 * p.a * p.dur * p.dur;
    s.v = p.v + p.a * p.dur;
  }
  if (s.v + a * duration < -1e-6) throw std::logic_error("motion profile: speed went negative");
  segs_.push_back(s);
}

double MotionProfile::t_end() const {
  return segs_.empty() ? t0_ : segs_.back().t + segs_.back().dur;
}

double MotionProfile::x_end() const {
  if (segs_.empty()) return x0_;
  const Segment& s = segs_.back();
  return s.x + s.v * s.dur + 0.5 * s.a * s.dur * s.dur;
}

double MotionProfile::v_end() const {
  if (segs_.empty()) return v0_;
  const Segment& s = segs_.back();
  return std::max(0.0, s.v + s.a * s.dur);
}

void MotionProfile::state_at(double t, double& x, double& v) const {
  if (segs_.empty() || t <= segs_.front().t) {
    x = x0_;
    v = v0_;
    return;
  }
  if (t >= t_end()) {
    // hold terminal speed; profiles built here end at rest so this is exact
    x = x_end() + v_end() * (t - t_end());
    v = v_end();
    return;
  }
  // linear scan is fine: profiles have tens of segments at most
  for (const Segment& s : segs_) {
    if (t < s.t + s.dur) {
      const double dt = t - s.t;
      x = s.x + s.v * dt + 0.5 * s.a * dt * dt;
      v = std::max(0.0, s.v + s.a * dt);
      return;
    }
  }
  x = x_end();
  v = v_end();
}

DriveTrace MotionProfile::sample(double dt, const std::string& vehicle_id,
                                 const std::string& route_id) const {
  const double span = t_end() - t_start();
  const int n = static_cast<int>(std::ceil(span / dt - kTiny)) + 1;
  DriveTrace tr;
  tr.vehicle_id = vehicle_id;
  tr.route_id = route_id;
  tr.t.resize(n);
  tr.v.resize(n);
  tr.x.resize(n);
  for (int i = 0; i < n; ++i) {
    const double t = t_start() + i * dt;
    double x, v;
    state_at(t, x, v);
    tr.t[i] = t;
    tr.v[i] = v;
    tr.x[i] = x;
  }
  return tr;
}

namespace {

// time to advance from (x, v) to X while ramping toward and holding cruise
// speed vc, accel magnitude a
double time_to_reach(double x, double v, double X, double vc, double a) {
  const double D = X - x;
  if (D <= kTiny) return 0.0;
  const double sgn = vc >= v ? 1.0 : -1.0;
  const double dr = std::abs(vc * vc - v * v) / (2.0 * a);
  if (dr >= D) {
    // still ramping at arrival
    const double aa = sgn * a;
    const double disc = std::max(0.0, v * v + 2.0 * aa * D);
    return (-v + std::sqrt(disc)) / aa;
  }
  return std::abs(vc - v) / a + (D - dr) / vc;
}

}  // namespace

void advance_to(MotionProfile& p, double X, double vc, double a) {
  const double x = p.x_end();
  const double v = p.v_end();
  const double D = X - x;
  if (D <= kTiny) return;
  const double sgn = vc >= v ? 1.0 : -1.0;
  const double dr = std::abs(vc * vc - v * v) / (2.0 * a);
  const double aa = sgn * a;
  if (dr >= D) {
    const double disc = std::max(0.0, v * v + 2.0 * aa * D);
    p.append(aa, (-v + std::sqrt(disc)) / aa);
    return;
  }
  p.append(aa, std::abs(vc - v) / a);
  p.append_hold((D - dr) / vc);
}

void stop_at(MotionProfile& p, double X, double vc, double a) {
  const double x = p.x_end();
  const double v = p.v_end();
  const double D = X - x;
  if (D <= kTiny) {
    if (v > kTiny) throw std::logic_error("stop_at: no distance left to brake");
    return;
  }
  const double d_brake = v * v / (2.0 * a);
  if (d_brake >= D - kTiny) {
    // closer than the comfort braking distance; brake exactly as hard as needed
    p.append(-v * v / (2.0 * D), 2.0 * D / v);
    return;
  }
  const double vp = std::min(vc, std::sqrt(std::max(v * v, a * D + 0.5 * v * v)));
  const double d1 = (vp * vp - v * v) / (2.0 * a);
  const double d2 = vp * vp / (2.0 * a);
  p.append(a, (vp - v) / a);
  p.append_hold(std::max(0.0, D - d1 - d2) / vp);
  p.append(-a, vp / a);
}

DriveTrace generate_vehicle_trace(const CorridorConfig& cfg, double depart_t, double cruise_speed,
                                  const std::string& vehicle_id) {
  cfg.validate();
  const double vc = std::clamp(cruise_speed, 1.0, cfg.speed_limit);
  MotionProfile p;
  p.reset(depart_t, 0.0, 0.0);
  for (const Intersection& sig : cfg.intersections) {
    const double t_arr =
        p.t_end() + time_to_reach(p.x_end(), p.v_end(), sig.position, vc, cfg.a_max);
    if (is_green(sig, t_arr)) {
      advance_to(p, sig.position, vc, cfg.a_max);
    } else {
      stop_at(p, sig.position - kStopGap, vc, cfg.a_max);
      const double t_go = next_green_onset(sig, p.t_end());
      p.append_hold(t_go - p.t_end());
    }
  }
  stop_at(p, cfg.length, vc, cfg.a_max);
  return p.sample(1.0, vehicle_id, "corridor");
}

std::vector<DriveTrace> generate_corridor_traffic(const CorridorConfig& cfg, int n_vehicles,
                                                  std::uint64_t seed) {
  cfg.validate();
  if (n_vehicles < 1) throw ConfigError("generate: n_vehicles must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<DriveTrace> out;
  out.reserve(n_vehicles);
  const double cyc = cfg.cycle();
  for (int i = 0; i < n_vehicles; ++i) {
    const double depart = canonical(rng) * 3.0 * cyc;
    const double vjit = cfg.speed_limit * (0.85 + 0.15 * canonical(rng));
    char id[16];
    std::snprintf(id, sizeof(id), "veh%03d", i);
    out.push_back(generate_vehicle_trace(cfg, depart, vjit, id));
  }
  return out;
}

}  // namespace hev
