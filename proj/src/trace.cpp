#include "hev/trace.hpp"

#include "hev/interp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace hev {

double DriveTrace::speed_at(double tq) const { return lerp_series(t, v, tq); }

double DriveTrace::position_at(double tq) const { return lerp_series(t, x, tq); }

void DriveTrace::validate() const {
  if (t.size() < 2) throw ParseError("trace: need at least 2 samples");
  if (v.size() != t.size() || x.size() != t.size()) throw ParseError("trace: column size mismatch");
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (i > 0 && !(t[i] > t[i - 1]))
      throw ParseError("trace: timestamps not strictly increasing at row " + std::to_string(i + 1));
    if (v[i] < 0.0) throw ParseError("trace: negative speed at row " + std::to_string(i + 1));
    if (i > 0 && x[i] < x[i - 1] - 1e-9)
      throw ParseError("trace: position decreasing at row " + std::to_string(i + 1));
  }
  const Eigen::VectorXd xi = cumulative_trapezoid(t, v);
  const double span = std::max(1.0, x[x.size() - 1] - x[0]);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (std::abs((x[i] - x[0]) - xi[i]) > 0.01 * span)
      throw ParseError("trace: position inconsistent with integrated speed at row " +
                       std::to_string(i + 1));
  }
}

Eigen::VectorXd cumulative_trapezoid(const Eigen::VectorXd& t, const Eigen::VectorXd& v) {
  Eigen::VectorXd x(t.size());
  if (t.size() == 0) return x;
  x[0] = 0.0;
  for (Eigen::Index i = 1; i < t.size(); ++i)
    x[i] = x[i - 1] + 0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1]);
  return x;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, int line_no) {
  try {
    size_t pos = 0;
    const double val = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return val;
  } catch (const std::exception&) {
    throw ParseError("trace: bad number '" + s + "' at line " + std::to_string(line_no));
  }
}

}  // namespace

DriveTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("trace: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("trace: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  const bool has_x = header.size() >= 3 && header[2] == "x_m";
  if (header.size() < 2 || header[0] != "t_sec" || header[1] != "v_mps")
    throw ParseError("trace: expected header t_sec,v_mps[,x_m] in " + path);

  std::vector<double> ts, vs, xs;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() < 2 || (has_x && cells.size() < 3))
      throw ParseError("trace: wrong column count at line " + std::to_string(line_no));
    ts.push_back(parse_double(cells[0], line_no));
    vs.push_back(parse_double(cells[1], line_no));
    if (has_x) xs.push_back(parse_double(cells[2], line_no));
  }

  DriveTrace tr;
  tr.t = Eigen::Map<Eigen::VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
  tr.v = Eigen::Map<Eigen::VectorXd>(vs.data(), static_cast<Eigen::Index>(vs.size()));
  if (has_x)
    tr.x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  else
    tr.x = cumulative_trapezoid(tr.t, tr.v);
  tr.validate();
  return tr;
}

void save_trace(const DriveTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("trace: cannot write " + path);
  out << "t_sec,v_mps,x_m\n";
  char buf[128];
  for (Eigen::Index i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", trace.t[i], trace.v[i], trace.x[i]);
    out << buf;
  }
}

}  // namespace hev
