#include "hev/preview.hpp"

#include <algorithm>
#include <cmath>

#include "hev/interp.hpp"

namespace hev {

double SampledProfile::value_at(double t) const {
  if (v.size() == 0) return 0.0;
  const double s = (t - t0) / dt;
  if (s <= 0) return v[0];
  const auto n = v.size();
  if (s >= static_cast<double>(n - 1)) return v[n - 1];
  const auto i = static_cast<Eigen::Index>(s);
  const double w = s - static_cast<double>(i);
  return (1 - w) * v[i] + w * v[i + 1];
}

SampledProfile profile_from_bin(const BinProfile& bin, double trip_start) {
  if (!bin.usable()) throw PreviewError("bin " + std::to_string(bin.bin) + " has no support");
  SampledProfile p;
  p.t0 = trip_start;
  p.dt = bin.tau.size() > 1 ? bin.tau[1] - bin.tau[0] : 1.0;
  p.v = bin.mean_v;
  return p;
}

SampledProfile profile_from_trace(const DriveTrace& trace, double dt) {
  SampledProfile p;
  p.t0 = trace.start_time();
  p.dt = dt;
  const int n = static_cast<int>(std::ceil(trace.duration() / dt - 1e-9)) + 1;
  p.v.resize(n);
  for (int i = 0; i < n; ++i) p.v[i] = trace.speed_at(p.t0 + i * dt);
  return p;
}

SpeedPreview build_preview(const DriveTrace& trace, const SampledProfile& tail, double t_now,
                           int h_r, double dt1, double dt2, double t_end) {
  if (h_r < 1 || dt1 <= 0 || dt2 <= 0) throw PreviewError("preview: bad horizon parameters");
  if (t_end <= t_now) throw PreviewError("preview: t_end must exceed t_now");
  if (t_now + h_r * dt1 > t_end + 1e-9)
    throw PreviewError("preview: receding horizon extends past t_end");

  SpeedPreview pv;
  pv.t_now = t_now;
  pv.t_end = t_end;
  pv.dt1 = dt1;
  pv.dt2 = dt2;
  pv.v_prev = trace.speed_at(t_now - dt1);
  pv.v_short.resize(h_r + 1);
  for (int i = 0; i <= h_r; ++i) pv.v_short[i] = trace.speed_at(t_now + i * dt1);

  const double remain = t_end - (t_now + h_r * dt1);
  const int h_long = remain > 1e-9 ? static_cast<int>(std::ceil(remain / dt2 - 1e-9)) : 0;
  pv.v_long.resize(h_long);
  for (int j = 0; j < h_long; ++j)
    pv.v_long[j] = std::max(0.0, tail.value_at(t_now + h_r * dt1 + j * dt2));
  if (h_long > 0) pv.v_long_prev = std::max(0.0, tail.value_at(t_now + h_r * dt1 - dt2));
  return pv;
}

double estimate_duration(const BinProfile& bin, double v_eps) {
  if (!bin.usable()) throw PreviewError("bin " + std::to_string(bin.bin) + " has no support");
  const auto m = bin.tau.size();
  Eigen::Index k = m;
  for (Eigen::Index j = m; j-- > 0;) {
    if (bin.mean_v[j] >= v_eps) break;
    k = j;
  }
  if (k >= m) return bin.tau[m - 1] + (m > 1 ? bin.tau[1] - bin.tau[0] : 1.0);
  return bin.tau[k];
}

double remaining_mean_speed(const SampledProfile& p, double t_a, double t_prof_end) {
  if (p.v.size() == 0) return 0.0;
  const auto n = p.v.size();
  double acc = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = p.t0 + i * p.dt;
    if (t < t_a - 1e-9 || t > t_prof_end + 1e-9) continue;
    acc += p.v[i];
    ++count;
  }
  if (count == 0) return p.value_at(t_a);
  return acc / static_cast<double>(count);
}

double reestimate_t_end(double t_now, double x_now, double x_total, double v_mean,
                        double v_floor) {
  const double remaining = std::max(0.0, x_total - x_now);
  return t_now + remaining / std::max(v_mean, v_floor);
}

double reestimate_t_end_from_profile(const SampledProfile& p, double t_prof_end, double t_now,
                                     double x_remaining, double v_floor) {
  if (x_remaining <= 0.0) return t_now;
  if (p.v.size() < 2) return t_now + x_remaining / v_floor;

  // trapezoid segments of the profile, walked from t_prof_end backward
  double acc = 0.0;
  double t_hi = t_prof_end;
  while (t_hi > p.t0 + 1e-9) {
    // segment [t_lo, t_hi] within one grid cell
    const double s = (t_hi - p.t0) / p.dt;
    const auto cell = static_cast<Eigen::Index>(std::ceil(s - 1e-9)) - 1;
    const double t_lo = std::max(p.t0, p.t0 + static_cast<double>(cell) * p.dt);
    const double v_hi = p.value_at(t_hi);
    const double v_lo = p.value_at(t_lo);
    const double seg = 0.5 * (v_hi + v_lo) * (t_hi - t_lo);
    if (acc + seg >= x_remaining) {
      // linear split of the segment distance is close enough on a dt2 grid
      const double frac = seg > 0.0 ? (x_remaining - acc) / seg : 1.0;
      const double tau = t_hi - frac * (t_hi - t_lo);
      return t_now + (t_prof_end - tau);
    }
    acc += seg;
    t_hi = t_lo;
  }
  // ego has more distance left than the whole profile covers
  const double pace =
      std::max(v_floor, acc / std::max(1e-9, t_prof_end - p.t0));
  return t_now + (t_prof_end - p.t0) + (x_remaining - acc) / pace;
}

}  // namespace hev
