#include "hev/bins.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hev/interp.hpp"

namespace hev {

double crossing_time(const DriveTrace& trace, double x) {
  const auto n = trace.t.size();
  if (n == 0 || trace.x.size() != n) throw ParseError("crossing_time: trace has no positions");
  if (trace.x[0] >= x) return trace.t[0];
  for (Eigen::Index i = 1; i < n; ++i) {
    if (trace.x[i] >= x) {
      const double dx = trace.x[i] - trace.x[i - 1];
      const double w = dx > 0 ? (x - trace.x[i - 1]) / dx : 1.0;
      return trace.t[i - 1] + w * (trace.t[i] - trace.t[i - 1]);
    }
  }
  throw ParseError("crossing_time: trace never reaches x=" + std::to_string(x));
}

int classify_trip(const DriveTrace& trace, const CorridorConfig& cfg) {
  cfg.validate();
  const Intersection& first = cfg.intersections.front();
  const double t_arr = crossing_time(trace, first.position);
  const double onset = red_onset(first);
  double since_red = std::fmod(t_arr - onset, first.cycle);
  if (since_red < 0) since_red += first.cycle;
  int bin = static_cast<int>(std::floor(since_red / (first.cycle / cfg.n_bins))) + 1;
  return std::min(bin, cfg.n_bins);  // guard the since_red == cycle edge
}

std::vector<BinProfile> aggregate_bins(const std::vector<DriveTrace>& traces,
                                       const std::vector<int>& bins, const CorridorConfig& cfg,
                                       double dt2, double horizon) {
  if (traces.size() != bins.size())
    throw ConfigError("aggregate: traces and bin assignments differ in length");
  if (dt2 <= 0 || horizon <= 0) throw ConfigError("aggregate: dt2 and horizon must be positive");
  const int m = static_cast<int>(std::floor(horizon / dt2 + 1e-9)) + 1;

  std::vector<BinProfile> out(cfg.n_bins);
  std::vector<Eigen::VectorXd> sum(cfg.n_bins, Eigen::VectorXd::Zero(m));
  std::vector<Eigen::VectorXd> sumsq(cfg.n_bins, Eigen::VectorXd::Zero(m));

  for (std::size_t k = 0; k < traces.size(); ++k) {
    const int b = bins[k];
    if (b < 1 || b > cfg.n_bins) throw ConfigError("aggregate: bin index out of range");
    const DriveTrace& tr = traces[k];
    const double t0 = tr.start_time();
    const double dur = tr.duration();
    for (int j = 0; j < m; ++j) {
      const double tau = j * dt2;
      const double v = tau <= dur ? tr.speed_at(t0 + tau) : 0.0;
      sum[b - 1][j] += v;
      sumsq[b - 1][j] += v * v;
    }
    out[b - 1].support += 1;
    out[b - 1].mean_duration += dur;
  }

  for (int b = 0; b < cfg.n_bins; ++b) {
    BinProfile& p = out[b];
    p.bin = b + 1;
    p.tau = Eigen::VectorXd::LinSpaced(m, 0.0, (m - 1) * dt2);
    p.mean_v = Eigen::VectorXd::Zero(m);
    p.std_v = Eigen::VectorXd::Zero(m);
    if (p.support == 0) continue;
    const double n = p.support;
    p.mean_duration /= n;
    for (int j = 0; j < m; ++j) {
      const double mu = sum[b][j] / n;
      p.mean_v[j] = mu;
      p.std_v[j] = std::sqrt(std::max(0.0, sumsq[b][j] / n - mu * mu));
    }
  }
  return out;
}

void save_bins_csv(const std::vector<BinProfile>& profiles, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot open for writing: " + path);
  f << "bin,t_sec,mean_mps,std_mps,count\n";
  char buf[160];
  for (const BinProfile& p : profiles) {
    for (Eigen::Index j = 0; j < p.tau.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%d\n", p.bin, p.tau[j], p.mean_v[j],
                    p.std_v[j], p.support);
      f << buf;
    }
  }
}

std::vector<BinProfile> load_bins_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open: " + path);
  std::string line;
  if (!std::getline(f, line)) throw ParseError(path + ": empty file");
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "bin,t_sec,mean_mps,std_mps,count")
    throw ParseError(path + ": expected header bin,t_sec,mean_mps,std_mps,count");

  std::map<int, BinProfile> by_bin;
  std::map<int, std::vector<std::array<double, 3>>> rows;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    double vals[5];
    for (int c = 0; c < 5; ++c) {
      if (!std::getline(ss, cell, ',') || cell.empty())
        throw ParseError(path + ":" + std::to_string(lineno) + ": expected 5 columns");
      try {
        vals[c] = std::stod(cell);
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    const int b = static_cast<int>(vals[0]);
    rows[b].push_back({vals[1], vals[2], vals[3]});
    by_bin[b].bin = b;
    by_bin[b].support = static_cast<int>(vals[4]);
  }

  std::vector<BinProfile> out;
  for (auto& [b, prof] : by_bin) {
    auto& rs = rows[b];
    std::sort(rs.begin(), rs.end(),
              [](const auto& a, const auto& c) { return a[0] < c[0]; });
    prof.tau.resize(rs.size());
    prof.mean_v.resize(rs.size());
    prof.std_v.resize(rs.size());
    for (std::size_t j = 0; j < rs.size(); ++j) {
      prof.tau[j] = rs[j][0];
      prof.mean_v[j] = rs[j][1];
      prof.std_v[j] = rs[j][2];
    }
    out.push_back(std::move(prof));
  }
  return out;
}

}  // namespace hev
