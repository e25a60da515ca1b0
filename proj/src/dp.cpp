#include "hev/dp.hpp"

#include <algorithm>
#include <cmath>

namespace hev {

namespace {

constexpr double kBig = 1e6;

struct AxisView {
  double lo, inv_step;
  int n;

  // clamped bracket + weight for linear interpolation
  void locate(double x, int& i, double& w) const {
    const double s = (x - lo) * inv_step;
    if (s <= 0) {
      i = 0;
      w = 0.0;
      return;
    }
    if (s >= n - 1) {
      i = n - 2;
      w = 1.0;
      return;
    }
    i = static_cast<int>(s);
    w = s - i;
  }
};

struct Interp3 {
  AxisView s, c, k;
  int stride_s, stride_c;

  double operator()(const Eigen::VectorXd& V, double soc, double t_cl, double t_cat) const {
    int is, ic, ik;
    double ws, wc, wk;
    s.locate(soc, is, ws);
    c.locate(t_cl, ic, wc);
    k.locate(t_cat, ik, wk);
    const int base = is * stride_s + ic * stride_c + ik;
    auto at = [&](int ds, int dc, int dk) {
      return V[base + ds * stride_s + dc * stride_c + dk];
    };
    const double c00 = (1 - ws) * at(0, 0, 0) + ws * at(1, 0, 0);
    const double c10 = (1 - ws) * at(0, 1, 0) + ws * at(1, 1, 0);
    const double c01 = (1 - ws) * at(0, 0, 1) + ws * at(1, 0, 1);
    const double c11 = (1 - ws) * at(0, 1, 1) + ws * at(1, 1, 1);
    const double m0 = (1 - wc) * c00 + wc * c10;
    const double m1 = (1 - wc) * c01 + wc * c11;
    return (1 - wk) * m0 + wk * m1;
  }
};

}  // namespace

void DpProblem::validate() const {
  if (v.size() < 1 || a.size() != v.size() || dt.size() != v.size())
    throw DpError("dp: v, a, dt must be equal-length and non-empty");
  if (!plant.engine.built()) throw DpError("dp: engine tables not built");
  for (const DpAxis* ax : {&grid_soc, &grid_t_cl, &grid_t_cat})
    if (ax->n < 2 || ax->hi <= ax->lo) throw DpError("dp: malformed grid axis");
  if (n_controls < 2) throw DpError("dp: need at least 2 control candidates");
  const long work = static_cast<long>(grid_soc.n) * grid_t_cl.n * grid_t_cat.n * n_controls;
  if (work > max_cells_times_controls)
    throw DpError("dp: grid too large (" + std::to_string(work) +
                  " states x controls, cap " + std::to_string(max_cells_times_controls) + ")");
  if (terminal_soc_hi < terminal_soc_lo) throw DpError("dp: empty terminal soc band");
}

DpResult dp_oracle(const DpProblem& pb, const VehicleState& x0) {
  pb.validate();
  const int N = pb.n_steps();
  const int ns = pb.grid_soc.n, nc = pb.grid_t_cl.n, nk = pb.grid_t_cat.n;
  const long cells = static_cast<long>(ns) * nc * nk;

  const Interp3 interp{{pb.grid_soc.lo, 1.0 / pb.grid_soc.step(), ns},
                       {pb.grid_t_cl.lo, 1.0 / pb.grid_t_cl.step(), nc},
                       {pb.grid_t_cat.lo, 1.0 / pb.grid_t_cat.step(), nk},
                       nc * nk,
                       nk};

  Eigen::VectorXd controls =
      Eigen::VectorXd::LinSpaced(pb.n_controls, pb.plant.battery.p_bat_min,
                                 pb.plant.battery.p_bat_max);

  // terminal cost: zero inside the charge-sustaining band, steep ramp outside
  const double band_w = std::max(1e-6, pb.terminal_soc_hi - pb.terminal_soc_lo);
  auto terminal_cost = [&](double soc) {
    if (soc >= pb.terminal_soc_lo && soc <= pb.terminal_soc_hi) return 0.0;
    const double d =
        soc < pb.terminal_soc_lo ? pb.terminal_soc_lo - soc : soc - pb.terminal_soc_hi;
    return kBig * (1.0 + d / band_w);
  };

  // stage evaluation shared by the sweep and the forward replay
  auto stage = [&](int step, const VehicleState& s, double u, const Eigen::VectorXd& V_next,
                   VehicleState* out_next, double* out_fuel) -> double {
    const double p_trac = traction_power(pb.v[step], pb.a[step], pb.plant.road);
    const double p_eng = power_split(p_trac, u, pb.plant.road.p_bat_aux);
    if (p_eng > pb.plant.engine.p_max) return kBig * (1.0 + p_eng / pb.plant.engine.p_max);
    Control ctl;
    ctl.p_bat = u;
    ctl.engine_on = p_eng > 0.0;
    VehicleState nx;
    try {
      nx = integrate_step(s, ctl, pb.v[step], pb.a[step], pb.dt[step], pb.plant);
    } catch (const ModelError&) {
      return kBig * 2.0;
    }

    double pen = 0.0;
    if (nx.soc < pb.soc_min) pen += (pb.soc_min - nx.soc) * 100.0;
    if (nx.soc > pb.soc_max) pen += (nx.soc - pb.soc_max) * 100.0;
    if (nx.t_cl < pb.t_cl_min) pen += (pb.t_cl_min - nx.t_cl) * 0.1;
    if (nx.t_cl > pb.t_cl_max) pen += (nx.t_cl - pb.t_cl_max) * 0.1;
    if (pb.t_cat_conditional && s.t_cat >= pb.t_cat_min && nx.t_cat < pb.t_cat_min)
      pen += (pb.t_cat_min - nx.t_cat) * 0.1;
    if (pen > 0.0) return kBig * (1.0 + pen);

    const EnginePoint pt =
        ctl.engine_on ? ool_lookup(std::min(p_eng, pb.plant.engine.p_max), pb.plant.engine)
                      : EnginePoint{};
    const double fuel = ctl.engine_on
                            ? fuel_rate(pt, s.t_cl, pb.plant.engine, pb.plant.thermal) *
                                  pb.dt[step]
                            : 0.0;
    if (out_next) *out_next = nx;
    if (out_fuel) *out_fuel = fuel;
    return fuel + interp(V_next, nx.soc, nx.t_cl, nx.t_cat);
  };

  // backward sweep, keeping every layer for the forward replay
  std::vector<Eigen::VectorXd> V(N + 1, Eigen::VectorXd(cells));
  for (int is = 0; is < ns; ++is)
    for (int ic = 0; ic < nc; ++ic)
      for (int ik = 0; ik < nk; ++ik) {
        const double soc = pb.grid_soc.lo + is * pb.grid_soc.step();
        V[N][(is * nc + ic) * nk + ik] = terminal_cost(soc);
      }

  for (int step = N - 1; step >= 0; --step) {
    for (int is = 0; is < ns; ++is) {
      for (int ic = 0; ic < nc; ++ic) {
        for (int ik = 0; ik < nk; ++ik) {
          VehicleState s;
          s.soc = pb.grid_soc.lo + is * pb.grid_soc.step();
          s.t_cl = pb.grid_t_cl.lo + ic * pb.grid_t_cl.step();
          s.t_cat = pb.grid_t_cat.lo + ik * pb.grid_t_cat.step();
          double best = kBig * 4.0;
          for (int iu = 0; iu < controls.size(); ++iu) {
            const double c = stage(step, s, controls[iu], V[step + 1], nullptr, nullptr);
            best = std::min(best, c);
          }
          V[step][(is * nc + ic) * nk + ik] = best;
        }
      }
    }
  }

  // forward replay from the true (off-grid) initial state
  DpResult res;
  res.value_at_start = interp(V[0], x0.soc, x0.t_cl, x0.t_cat);
  res.p_bat.resize(N);
  res.states.reserve(N + 1);
  res.states.push_back(x0);
  res.feasible = true;
  VehicleState s = x0;
  for (int step = 0; step < N; ++step) {
    double best = kBig * 4.0, best_u = 0.0, best_fuel = 0.0;
    VehicleState best_nx = s;
    for (int iu = 0; iu < controls.size(); ++iu) {
      VehicleState nx;
      double fuel = 0.0;
      const double c = stage(step, s, controls[iu], V[step + 1], &nx, &fuel);
      if (c < best) {
        best = c;
        best_u = controls[iu];
        best_nx = nx;
        best_fuel = fuel;
      }
    }
    if (best >= kBig) {
      res.feasible = false;
      break;
    }
    res.p_bat[step] = best_u;
    res.fuel_kg += best_fuel;
    s = best_nx;
    res.states.push_back(s);
  }
  if (res.feasible) {
    const double soc_T = res.states.back().soc;
    if (soc_T < pb.terminal_soc_lo - 1e-9 || soc_T > pb.terminal_soc_hi + 1e-9)
      res.feasible = false;
  }
  return res;
}

}  // namespace hev
