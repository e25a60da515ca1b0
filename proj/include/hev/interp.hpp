#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace hev {

// Monotone cubic Hermite interpolant (Fritsch-Carlson slopes). Preserves
// monotonicity of the knot data and is C1 on the whole domain, which the
// gradient-based solver relies on. Outside the knot range the curve is
// held flat at the end values.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;

  MonotoneCubic(Eigen::VectorXd x, Eigen::VectorXd y)
      : x_(std::move(x)), y_(std::move(y)) {
    const auto n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("MonotoneCubic: need >=2 knots");
    for (Eigen::Index i = 0; i + 1 < n; ++i)
      if (!(x_[i + 1] > x_[i])) throw std::invalid_argument("MonotoneCubic: x not increasing");

    Eigen::VectorXd h(n - 1), d(n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      d[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    m_.resize(n);
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
      if (d[i - 1] * d[i] <= 0.0) {
        m_[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
      }
    }
    m_[0] = edge_slope(h[0], n > 2 ? h[1] : h[0], d[0], n > 2 ? d[1] : d[0]);
    m_[n - 1] = edge_slope(h[n - 2], n > 2 ? h[n - 3] : h[n - 2], d[n - 2],
                           n > 2 ? d[n - 3] : d[n - 2]);
  }

  double operator()(double x) const { return eval(x).first; }
  double derivative(double x) const { return eval(x).second; }

  std::pair<double, double> eval(double x) const {
    const auto n = x_.size();
    if (x <= x_[0]) return {y_[0], 0.0};
    if (x >= x_[n - 1]) return {y_[n - 1], 0.0};
    Eigen::Index i = segment(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double v = h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
    const double dh00 = (6 * t2 - 6 * t) / h, dh10 = (3 * t2 - 4 * t + 1);
    const double dh01 = (-6 * t2 + 6 * t) / h, dh11 = (3 * t2 - 2 * t);
    const double dv = dh00 * y_[i] + dh10 * m_[i] + dh01 * y_[i + 1] + dh11 * m_[i + 1];
    return {v, dv};
  }

  double x_min() const { return x_[0]; }
  double x_max() const { return x_[x_.size() - 1]; }
  const Eigen::VectorXd& knots_x() const { return x_; }
  const Eigen::VectorXd& knots_y() const { return y_; }

 private:
  static double edge_slope(double h0, double h1, double d0, double d1) {
    double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (m * d0 <= 0.0) return 0.0;
    if (std::abs(m) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return m;
  }

  Eigen::Index segment(double x) const {
    // knot counts are ~10; linear scan beats binary search here
    Eigen::Index i = 0;
    while (i + 2 < x_.size() && x >= x_[i + 1]) ++i;
    return i;
  }

  Eigen::VectorXd x_, y_, m_;
};

// Linear interpolation over a uniformly or arbitrarily spaced grid; used for
// resampling speed traces. Constant extension outside the domain.
inline double lerp_series(const Eigen::VectorXd& t, const Eigen::VectorXd& v, double tq) {
  const auto n = t.size();
  if (n == 0) throw std::invalid_argument("lerp_series: empty series");
  if (tq <= t[0]) return v[0];
  if (tq >= t[n - 1]) return v[n - 1];
  Eigen::Index lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    (t[mid] <= tq ? lo : hi) = mid;
  }
  const double w = (tq - t[lo]) / (t[lo + 1] - t[lo]);
  return (1.0 - w) * v[lo] + w * v[lo + 1];
}

}  // namespace hev
