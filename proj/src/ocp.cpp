#include "hev/ocp.hpp"

#include <algorithm>
#include <cmath>

namespace hev {

using Eigen::VectorXd;

OcpNodes ocp_nodes_from_preview(const SpeedPreview& pv) {
  const int S = pv.h_short();
  const int L = pv.h_long();
  if (S < 1) throw OcpError("preview has no short segment");
  OcpNodes nd;
  nd.v.resize(S + L);
  nd.a.resize(S + L);
  nd.d.resize(S + L);
  for (int i = 0; i < S; ++i) {
    const double v_before = i == 0 ? pv.v_prev : pv.v_short[i - 1];
    nd.v[i] = pv.v_short[i];
    nd.a[i] = (pv.v_short[i] - v_before) / pv.dt1;
    nd.d[i] = pv.dt1;
  }
  const double t2 = pv.t_now + S * pv.dt1;
  for (int j = 0; j < L; ++j) {
    // difference on the coarse grid only; mixing resolutions across the seam
    // would divide tail smoothing error by dt1 and fabricate huge accels
    const double v_before = j == 0 ? pv.v_long_prev : pv.v_long[j - 1];
    nd.v[S + j] = pv.v_long[j];
    nd.a[S + j] = (pv.v_long[j] - v_before) / pv.dt2;
    // clip the last node to the trip end so the model never holds phantom
    // seconds of charge capacity past t_end
    nd.d[S + j] = std::min(pv.dt2, std::max(1e-9, pv.t_end - (t2 + j * pv.dt2)));
  }
  return nd;
}

struct OcpTranscription::Work {
  OcpSpec spec;
  PlantParams plant;
  OcpNodes nd;
  bool cat_active = false;
  int n = 0;        // nodes
  int m = 0;        // inequality count
  int block = 0;    // constraints per path node
  VectorXd p_trac;  // W per node
  VectorXd lb, ub;  // z units
  double term_lo = 0.0, term_hi = 0.0;

  // rollout cache, keyed on the exact z vector
  struct Cache {
    bool valid = false;
    VectorXd z;
    // states 0..n
    VectorXd soc, tcl, tcat;
    // per node
    VectorXd pe, gate, fuel_g;        // engine power W, gate, stage fuel (obj units)
    VectorXd As, Bs;                  // soc_{k+1} = soc_k*As? (see below)
    VectorXd Ac, Bc, Ak, Bk;
    VectorXd Fz, Fc;                  // dJ/dz_k, dJ/dtcl_k (stage terms)
    double obj = 0.0;
  };
  Cache cache;

  void rollout(const VectorXd& z) {
    Cache& c = cache;
    if (c.valid && c.z.size() == z.size() && (c.z.array() == z.array()).all()) return;
    c.z = z;
    c.soc.resize(n + 1);
    c.tcl.resize(n + 1);
    c.tcat.resize(n + 1);
    c.pe.resize(n);
    c.gate.resize(n);
    c.fuel_g.resize(n);
    c.As.resize(n);
    c.Bs.resize(n);
    c.Ac.resize(n);
    c.Bc.resize(n);
    c.Ak.resize(n);
    c.Bk.resize(n);
    c.Fz.resize(n);
    c.Fc.resize(n);

    const auto& eng = plant.engine;
    const auto& th = plant.thermal;
    const auto& cat = plant.catalyst;
    const double eps = eng.eps_on;

    c.soc[0] = spec.x0.soc;
    c.tcl[0] = spec.x0.t_cl;
    c.tcat[0] = spec.x0.t_cat;
    c.obj = 0.0;

    for (int k = 0; k < n; ++k) {
      const double p_bat = z[k] * kPowerScale;
      const double dk = nd.d[k];
      const double s = c.soc[k], tc = c.tcl[k], tk = c.tcat[k];

      const double pe = p_trac[k] - p_bat + plant.road.p_bat_aux;
      const double g = on_gate(pe, eps);
      const double dg = on_gate_dp(pe, eps);
      c.pe[k] = pe;
      c.gate[k] = g;

      // battery
      const double rs = soc_rate(s, p_bat, plant.battery);
      const auto rsd = soc_rate_deriv(s, p_bat, plant.battery);
      c.soc[k + 1] = s + dk * rs;
      c.As[k] = 1.0 + dk * rsd.d_soc;
      c.Bs[k] = dk * rsd.d_pbat;  // per W of p_bat

      // engine point and fuel (all identically zero for pe <= 0)
      const double pe_pos = std::max(0.0, pe);
      const EnginePoint pt = pe_pos > 0.0 ? ool_lookup(std::min(pe_pos, eng.p_max), eng)
                                          : EnginePoint{};
      const auto od = ool_deriv(pe_pos, eng);
      const double fn = fuel_nominal(pe_pos, eng, th);
      const double dfn = fuel_nominal_dp(pe_pos, eng, th);
      const double al = alpha_tcl(tc);
      const double dal = alpha_tcl_deriv(tc);

      const double fr = g * al * fn;  // kg/s
      c.fuel_g[k] = dk * fr * kObjScale;
      c.obj += c.fuel_g[k];
      const double dfr_dpe = dg * al * fn + g * al * dfn;
      c.Fz[k] = dk * kObjScale * dfr_dpe;  // per W of pe
      c.Fc[k] = dk * kObjScale * g * dal * fn;

      // coolant
      const double rc = coolant_rate_gated(tc, pe, g, eng, th);
      const auto rcd = coolant_rate_deriv(tc, pe, g, dg, eng, th);
      c.tcl[k + 1] = tc + dk * rc;
      c.Ac[k] = 1.0 + dk * rcd.d_tcl;
      c.Bc[k] = dk * rcd.d_peng;  // per W of pe

      // catalyst
      const double rk = catalyst_rate_gated(tk, nd.v[k], pt.omega, pt.tau, g, cat);
      const auto rkd = catalyst_rate_deriv(tk, nd.v[k], pt.omega, pt.tau, g, cat);
      const double on_minus_off =
          catalyst_rate_on(tk, nd.v[k], pt.omega, pt.tau, cat) - catalyst_rate_off(tk, cat);
      c.tcat[k + 1] = tk + dk * rk;
      c.Ak[k] = 1.0 + dk * rkd.d_tcat;
      c.Bk[k] =
          dk * (rkd.d_omega * od.domega_dp + rkd.d_tau * od.dtau_dp + dg * on_minus_off);

      // soft thermal penalty on the freshly computed state k+1 is added in
      // objective(); stage arrays here stay penalty-free
    }
    c.valid = true;
  }

  double soft_penalty() const {
    if (!spec.soft_thermal) return 0.0;
    double pen = 0.0;
    for (int k = 1; k <= n; ++k) {
      const double lo = std::max(0.0, spec.bounds.t_cl_min - cache.tcl[k]);
      const double hi = std::max(0.0, cache.tcl[k] - spec.bounds.t_cl_max);
      pen += lo * lo + hi * hi;
      if (cat_active) {
        const double cl = std::max(0.0, spec.bounds.t_cat_min - cache.tcat[k]);
        pen += cl * cl;
      }
    }
    return spec.soft_weight * pen;
  }

  double objective(const VectorXd& z) {
    rollout(z);
    return cache.obj + soft_penalty();
  }

  VectorXd constraints(const VectorXd& z) {
    rollout(z);
    VectorXd c(m);
    int i = 0;
    const auto& b = spec.bounds;
    for (int k = 1; k <= n; ++k) {
      c[i++] = b.soc_min - cache.soc[k];
      c[i++] = cache.soc[k] - b.soc_max;
      if (!spec.soft_thermal) {
        c[i++] = (b.t_cl_min - cache.tcl[k]) * kTempScale;
        c[i++] = (cache.tcl[k] - b.t_cl_max) * kTempScale;
        if (cat_active) c[i++] = (b.t_cat_min - cache.tcat[k]) * kTempScale;
      }
    }
    c[i++] = term_lo - cache.soc[n];
    c[i++] = cache.soc[n] - term_hi;
    return c;
  }

  // reverse sweep shared by both gradient callbacks. seeds_* are dF/dstate_k
  // for k = 1..n; obj=true adds the stage-fuel terms (and soft penalty).
  VectorXd adjoint(const VectorXd& z, const VectorXd& seed_s, const VectorXd& seed_c,
                   const VectorXd& seed_k, bool obj) {
    rollout(z);
    VectorXd grad = VectorXd::Zero(n);
    double ls = 0.0, lc = 0.0, lk = 0.0;
    for (int k = n - 1; k >= 0; --k) {
      // absorb seeds sitting on state k+1
      ls += seed_s[k + 1];
      lc += seed_c[k + 1];
      lk += seed_k[k + 1];
      if (obj && spec.soft_thermal) {
        const auto& b = spec.bounds;
        const double lo = std::max(0.0, b.t_cl_min - cache.tcl[k + 1]);
        const double hi = std::max(0.0, cache.tcl[k + 1] - b.t_cl_max);
        lc += spec.soft_weight * 2.0 * (hi - lo);
        if (cat_active) {
          const double cl = std::max(0.0, b.t_cat_min - cache.tcat[k + 1]);
          lk += spec.soft_weight * 2.0 * (-cl);
        }
      }
      // pull back through node k; pe = p_trac - p_bat + aux, dpe/dp_bat = -1
      double gz = ls * cache.Bs[k];                       // soc path, per W p_bat
      gz += (lc * cache.Bc[k] + lk * cache.Bk[k]) * -1.0; // thermal paths via pe
      if (obj) gz += cache.Fz[k] * -1.0;                  // stage fuel via pe
      grad[k] = gz * kPowerScale;
      // propagate multipliers to state k
      ls = ls * cache.As[k];
      lc = lc * cache.Ac[k] + (obj ? cache.Fc[k] : 0.0);
      lk = lk * cache.Ak[k];
    }
    return grad;
  }

  VectorXd gradient(const VectorXd& z) {
    const VectorXd zero = VectorXd::Zero(n + 1);
    return adjoint(z, zero, zero, zero, true);
  }

  VectorXd weighted_constraint_gradient(const VectorXd& z, const VectorXd& w) {
    VectorXd seed_s = VectorXd::Zero(n + 1);
    VectorXd seed_c = VectorXd::Zero(n + 1);
    VectorXd seed_k = VectorXd::Zero(n + 1);
    int i = 0;
    for (int k = 1; k <= n; ++k) {
      seed_s[k] += -w[i] + w[i + 1];
      i += 2;
      if (!spec.soft_thermal) {
        seed_c[k] += (-w[i] + w[i + 1]) * kTempScale;
        i += 2;
        if (cat_active) {
          seed_k[k] += -w[i] * kTempScale;
          i += 1;
        }
      }
    }
    seed_s[n] += -w[i] + w[i + 1];
    return adjoint(z, seed_s, seed_c, seed_k, false);
  }
};

OcpTranscription::OcpTranscription(const OcpSpec& spec, const PlantParams& plant)
    : w_(std::make_shared<Work>()) {
  if (!plant.engine.built()) throw OcpError("engine tables not built");
  plant.validate();
  Work& w = *w_;
  w.spec = spec;
  w.plant = plant;
  w.nd = ocp_nodes_from_preview(spec.preview);
  w.n = w.nd.n();
  w.cat_active = spec.x0.t_cat >= spec.bounds.t_cat_min;
  w.block = 2 + (spec.soft_thermal ? 0 : (w.cat_active ? 3 : 2));
  w.m = w.n * w.block + 2;
  w.term_lo = spec.term_lo_frac * spec.soc_init;
  w.term_hi = spec.term_hi_frac * spec.soc_init;
  if (w.term_lo > w.term_hi) throw OcpError("terminal band is empty");

  w.p_trac.resize(w.n);
  w.lb.resize(w.n);
  w.ub.resize(w.n);
  const double aux = plant.road.p_bat_aux;
  for (int k = 0; k < w.n; ++k) {
    w.p_trac[k] = traction_power(w.nd.v[k], w.nd.a[k], plant.road);
    const double lo = std::max(plant.battery.p_bat_min, w.p_trac[k] + aux - plant.engine.p_max);
    const double hi = std::min(plant.battery.p_bat_max, std::max(0.0, w.p_trac[k] + aux));
    if (lo > hi)
      throw OcpError("node " + std::to_string(k) +
                     ": demand exceeds combined engine and battery limits");
    w.lb[k] = lo / kPowerScale;
    w.ub[k] = hi / kPowerScale;
  }

  auto wp = w_;
  nlp_.lb = w.lb;
  nlp_.ub = w.ub;
  nlp_.n_ineq = w.m;
  nlp_.objective = [wp](const VectorXd& z) { return wp->objective(z); };
  nlp_.gradient = [wp](const VectorXd& z) { return wp->gradient(z); };
  nlp_.constraints = [wp](const VectorXd& z) { return wp->constraints(z); };
  nlp_.weighted_constraint_gradient = [wp](const VectorXd& z, const VectorXd& mult) {
    return wp->weighted_constraint_gradient(z, mult);
  };
}

int OcpTranscription::n_nodes() const { return w_->n; }
const OcpNodes& OcpTranscription::nodes() const { return w_->nd; }
bool OcpTranscription::t_cat_constraint_active() const { return w_->cat_active; }
double OcpTranscription::traction_at(int node) const { return w_->p_trac[node]; }

VectorXd OcpTranscription::initial_guess() const {
  return VectorXd::Zero(w_->n).cwiseMax(w_->lb).cwiseMin(w_->ub);
}

double OcpTranscription::fuel_kg(const VectorXd& z) const {
  w_->rollout(z);
  return w_->cache.obj / kObjScale;
}

std::vector<VehicleState> OcpTranscription::states(const VectorXd& z) const {
  w_->rollout(z);
  std::vector<VehicleState> out(w_->n + 1);
  for (int k = 0; k <= w_->n; ++k) {
    out[k].soc = w_->cache.soc[k];
    out[k].t_cl = w_->cache.tcl[k];
    out[k].t_cat = w_->cache.tcat[k];
    out[k].engine_on = k < w_->n ? w_->cache.pe[k] >= w_->plant.engine.eps_on : false;
  }
  return out;
}

}  // namespace hev
