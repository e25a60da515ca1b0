#include "hev/eco.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace hev {

namespace {

constexpr double kStopGap = 1.25;
constexpr double kInf = std::numeric_limits<double>::infinity();

// onset of the green window containing t, or of the next one if t is red
double window_onset_at_or_after(const Intersection& s, double t) {
  double ph = std::fmod(t, s.cycle);
  if (ph < 0) ph += s.cycle;
  double rel = ph - s.green_start;
  if (rel < 0) rel += s.cycle;
  if (rel < s.green_duration) return t - rel;
  return t + (s.cycle - rel);
}

// travel time over distance d from speed v, ramping toward cruise target u
// at accel magnitude a; +inf when u < v cannot be reached within d
double glide_time(double d, double v, double u, double a) {
  if (d <= 0) return 0.0;
  if (u >= v) {
    const double dr = (u * u - v * v) / (2 * a);
    if (dr >= d) return (std::sqrt(v * v + 2 * a * d) - v) / a;
    return (u - v) / a + (d - dr) / u;
  }
  const double dr = (v * v - u * u) / (2 * a);
  if (dr > d) return kInf;
  return (v - u) / a + (d - dr) / u;
}

double glide_arrival_speed(double d, double v, double u, double a) {
  if (u >= v) {
    const double dr = (u * u - v * v) / (2 * a);
    if (dr >= d) return std::sqrt(v * v + 2 * a * d);
  }
  return u;
}

// time to come to rest after distance d, ramping toward cruise cap u first
double stop_time(double d, double v, double u, double a) {
  if (d <= 0) return v > 1e-9 ? kInf : 0.0;
  const double db = v * v / (2 * a);
  if (db >= d) return 2 * d / std::max(v, 1e-9);  // brake harder than comfort
  const double vp = std::min(u, std::sqrt(a * d + 0.5 * v * v));
  if (vp <= v) return 2 * d / std::max(v, 1e-9);
  const double d1 = (vp * vp - v * v) / (2 * a);
  const double d2 = vp * vp / (2 * a);
  return (vp - v) / a + std::max(0.0, d - d1 - d2) / vp + vp / a;
}

double stop_peak(double d, double v, double u, double a) {
  return std::clamp(std::sqrt(std::max(0.0, a * d + 0.5 * v * v)), v, u);
}

struct Leg {
  bool stop = false;
  double u = 0.0;       // cruise target for the leg
  double t_cross = 0.0; // absolute crossing time at the line
};

struct SearchCtx {
  const CorridorConfig* cfg;
  const EcoOptions* opts;
  double v_cap = 0.0;
  double best_cost = kInf;
  std::vector<Leg> best;
  std::vector<Leg> cur;
};

// bisect the monotone-decreasing f for f(u) = target on [lo, hi]
template <class F>
double bisect_speed(F f, double lo, double hi, double target) {
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

void search(SearchCtx& ctx, std::size_t i, double t, double x, double v, double cost) {
  const CorridorConfig& cfg = *ctx.cfg;
  const EcoOptions& opts = *ctx.opts;
  if (cost >= ctx.best_cost) return;

  if (i == cfg.intersections.size()) {
    const double d = cfg.length - x;
    const double vp = stop_peak(d, v, ctx.v_cap, cfg.a_max);
    const double total = cost + opts.accel_weight * std::max(0.0, vp * vp - v * v) / 2 +
                         opts.time_weight * stop_time(d, v, ctx.v_cap, cfg.a_max);
    if (total < ctx.best_cost) {
      ctx.best_cost = total;
      ctx.best = ctx.cur;
    }
    return;
  }

  const Intersection& sig = cfg.intersections[i];
  const double a = cfg.a_max;
  const double d = sig.position - x;
  const double u_lo = std::max(opts.v_min, std::sqrt(std::max(0.0, v * v - 2 * a * d)));
  const double t_fast = t + glide_time(d, v, ctx.v_cap, a);
  const double t_slow = t + glide_time(d, v, u_lo, a);
  const double onset0 = window_onset_at_or_after(sig, t_fast);

  for (int k = 0; k < opts.max_windows; ++k) {
    const double onset = onset0 + k * sig.cycle;
    const double ws = std::max(onset + opts.margin, t_fast);
    const double we = onset + sig.green_duration - opts.margin;
    if (we <= ws) continue;

    // glide candidate: cross at the earliest admissible instant of the window
    if (ws <= t_slow) {
      double u, tc = ws;
      if (ws <= t_fast + 1e-9) {
        u = ctx.v_cap;
        tc = t_fast;
      } else {
        u = bisect_speed([&](double uu) { return t + glide_time(d, v, uu, a); }, u_lo, ctx.v_cap,
                         ws);
      }
      const double varr = glide_arrival_speed(d, v, u, a);
      const double c = opts.accel_weight * std::max(0.0, varr * varr - v * v) / 2 +
                       opts.time_weight * (tc - t);
      ctx.cur.push_back({false, u, tc});
      search(ctx, i + 1, tc, sig.position, varr, cost + c);
      ctx.cur.pop_back();
    }

    // stop candidate: halt just before the line, wait for this onset, then go
    const double ds = d - kStopGap;
    const double t_stop_fast = t + stop_time(ds, v, ctx.v_cap, a);
    const double launch = std::sqrt(2 * a * kStopGap) / a;  // time to clear the line
    if (t_stop_fast <= onset && ds > 0 && launch <= sig.green_duration - opts.margin) {
      double u;
      if (t + stop_time(ds, v, std::max(v, opts.v_min), a) <= onset) {
        u = std::max(v, opts.v_min);  // no acceleration needed before the stop
      } else {
        u = bisect_speed([&](double uu) { return t + stop_time(ds, v, uu, a); },
                         std::max(v, opts.v_min), ctx.v_cap, onset);
      }
      const double vp = stop_peak(ds, v, u, a);
      const double v_cross = std::sqrt(2 * a * kStopGap);
      const double t_cross = onset + v_cross / a;
      const double c = opts.accel_weight *
                           (std::max(0.0, vp * vp - v * v) / 2 + v_cross * v_cross / 2) +
                       opts.time_weight * (t_cross - t);
      ctx.cur.push_back({true, u, t_cross});
      search(ctx, i + 1, t_cross, sig.position, v_cross, cost + c);
      ctx.cur.pop_back();
    }
  }
}

}  // namespace

DriveTrace plan_eco_trajectory(const CorridorConfig& cfg, double depart_t, const EcoOptions& opts,
                               const std::string& vehicle_id) {
  cfg.validate();
  if (opts.v_min <= 0 || opts.v_min >= cfg.speed_limit)
    throw ConfigError("eco: v_min must lie in (0, speed_limit)");
  if (opts.max_windows < 1) throw ConfigError("eco: max_windows must be >= 1");
  const double v_cap =
      opts.v_cruise_cap > 0 ? std::min(opts.v_cruise_cap, cfg.speed_limit) : cfg.speed_limit;
  if (v_cap <= opts.v_min) throw ConfigError("eco: cruise cap must exceed v_min");

  SearchCtx ctx;
  ctx.cfg = &cfg;
  ctx.opts = &opts;
  ctx.v_cap = v_cap;
  search(ctx, 0, depart_t, 0.0, 0.0, 0.0);
  if (!std::isfinite(ctx.best_cost))
    throw PlanError("eco: no green-window chain reachable within " +
                    std::to_string(opts.max_windows) + " windows per intersection");

  MotionProfile p;
  p.reset(depart_t, 0.0, 0.0);
  for (std::size_t i = 0; i < ctx.best.size(); ++i) {
    const Leg& leg = ctx.best[i];
    const Intersection& sig = cfg.intersections[i];
    if (leg.stop) {
      stop_at(p, sig.position - kStopGap, leg.u, cfg.a_max);
      const double t_go = leg.t_cross - std::sqrt(2 * kStopGap / cfg.a_max);
      if (t_go > p.t_end()) p.append_hold(t_go - p.t_end());
    } else {
      advance_to(p, sig.position, leg.u, cfg.a_max);
    }
  }
  stop_at(p, cfg.length, v_cap, cfg.a_max);
  return p.sample(1.0, vehicle_id, "corridor-eco");
}

}  // namespace hev
