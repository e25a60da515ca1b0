#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "hev/mpc.hpp"
#include "hev/ocp.hpp"
#include "hev/rule_based.hpp"

using namespace hev;

namespace {

PlantParams make_plant() {
  PlantParams p;
  p.engine.build();
  p.validate();
  return p;
}

// preview with an exact head and a coarse tail, assembled by hand so tests
// control the node pattern exactly
SpeedPreview make_preview(const Eigen::VectorXd& v_short, const Eigen::VectorXd& v_long,
                          double dt1, double dt2) {
  SpeedPreview pv;
  pv.t_now = 0.0;
  pv.dt1 = dt1;
  pv.dt2 = dt2;
  pv.v_prev = v_short[0];
  pv.v_short = v_short;
  pv.v_long = v_long;
  // matches build_preview when dt2 == dt1 and the tail tracks the trace
  if (v_long.size() > 0) pv.v_long_prev = v_short[v_short.size() - 2];
  pv.t_end = (v_short.size() - 1) * dt1 + v_long.size() * dt2;
  return pv;
}

VehicleState warm_state() {
  VehicleState s;
  s.soc = 0.6;
  s.t_cl = 75.0;
  s.t_cat = 380.0;
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// rule-based baseline

TEST_CASE("cold coolant idles the engine at standstill") {
  PlantParams plant = make_plant();
  RuleBasedConfig cfg;
  VehicleState s;
  s.soc = 0.6;
  s.t_cl = 45.0;
  s.t_cat = 400.0;
  ControlDecision d = rule_based_step(s, 0.0, 300.0, cfg, plant);
  CHECK(d.engine_on);
  CHECK(d.p_eng == doctest::Approx(cfg.idle_power));
  CHECK(d.p_bat == doctest::Approx(300.0 - cfg.idle_power));
}

TEST_CASE("warm low demand runs electric") {
  PlantParams plant = make_plant();
  RuleBasedConfig cfg;
  VehicleState s;
  s.soc = 0.6;
  s.t_cl = 70.0;
  s.t_cat = 300.0;
  ControlDecision d = rule_based_step(s, 5e3, 300.0, cfg, plant);
  CHECK(!d.engine_on);
  CHECK(d.p_eng == 0.0);
  CHECK(d.p_bat == doctest::Approx(5300.0));
}

TEST_CASE("low SOC turns the engine on with a charge bias") {
  PlantParams plant = make_plant();
  RuleBasedConfig cfg;
  VehicleState s;
  s.soc = 0.50;
  s.t_cl = 70.0;
  s.t_cat = 300.0;
  ControlDecision d = rule_based_step(s, 1e3, 300.0, cfg, plant);
  CHECK(d.engine_on);
  CHECK(d.p_eng > 1300.0);          // more than the demand
  CHECK(d.p_bat < 0.0);             // surplus charges the battery
  CHECK(d.p_eng == doctest::Approx(1300.0 - d.p_bat));
  CHECK(d.p_eng == doctest::Approx(1300.0 + cfg.charge_bias_gain * 0.1));
}

TEST_CASE("high demand engages the engine at the leveled load") {
  PlantParams plant = make_plant();
  RuleBasedConfig cfg;
  VehicleState s = warm_state();
  ControlDecision d = rule_based_step(s, 20e3, 300.0, cfg, plant);
  CHECK(d.engine_on);
  CHECK(d.p_eng == doctest::Approx(20300.0));
  CHECK(d.p_bat == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("full battery shuts charging off during regen") {
  PlantParams plant = make_plant();
  RuleBasedConfig cfg;
  VehicleState s = warm_state();
  s.soc = 0.79;
  ControlDecision d = rule_based_step(s, -15e3, 300.0, cfg, plant);
  CHECK(!d.engine_on);
  CHECK(d.p_bat == 0.0);  // regen refused above the cutoff
}

TEST_CASE("regen charges below the cutoff") {
  PlantParams plant = make_plant();
  RuleBasedConfig cfg;
  VehicleState s = warm_state();
  ControlDecision d = rule_based_step(s, -15e3, 300.0, cfg, plant);
  CHECK(!d.engine_on);
  CHECK(d.p_bat == doctest::Approx(-14700.0));
}

TEST_CASE("demand beyond engine plus battery is rejected") {
  PlantParams plant = make_plant();
  RuleBasedConfig cfg;
  VehicleState s = warm_state();
  CHECK_THROWS_AS(rule_based_step(s, 110e3, 300.0, cfg, plant), ModelError);
}

TEST_CASE("rule-based config validation") {
  RuleBasedConfig cfg;
  cfg.soc_low = 0.7;  // above the target
  CHECK_THROWS_AS(cfg.validate(), ModelError);
}

// ---------------------------------------------------------------------------
// transcription

TEST_CASE("decision vector is one battery power per node") {
  PlantParams plant = make_plant();
  SpeedPreview pv = make_preview(Eigen::VectorXd::Constant(6, 10.0),
                                 Eigen::VectorXd::Constant(60, 9.0), 1.0, 10.0);
  OcpSpec spec;
  spec.x0 = warm_state();
  spec.preview = pv;
  OcpTranscription ocp(spec, plant);
  CHECK(ocp.n_nodes() == 65);
  CHECK(ocp.nlp().n() == 65);
  CHECK(ocp.nlp().lb.size() == 65);
  // soc pair + coolant pair + catalyst per node, then the terminal band
  CHECK(ocp.nlp().n_ineq == 65 * 5 + 2);
  CHECK(ocp.t_cat_constraint_active());
}

TEST_CASE("catalyst constraint is absent below light-off") {
  PlantParams plant = make_plant();
  SpeedPreview pv = make_preview(Eigen::VectorXd::Constant(4, 8.0),
                                 Eigen::VectorXd::Constant(3, 8.0), 1.0, 10.0);
  OcpSpec spec;
  spec.x0 = warm_state();
  spec.x0.t_cat = 240.0;  // still heating up
  spec.preview = pv;
  OcpTranscription ocp(spec, plant);
  CHECK(!ocp.t_cat_constraint_active());
  CHECK(ocp.nlp().n_ineq == ocp.n_nodes() * 4 + 2);
}

TEST_CASE("soft thermal mode moves the thermal rows into the objective") {
  PlantParams plant = make_plant();
  SpeedPreview pv = make_preview(Eigen::VectorXd::Constant(4, 8.0),
                                 Eigen::VectorXd::Constant(3, 8.0), 1.0, 10.0);
  OcpSpec spec;
  spec.x0 = warm_state();
  spec.preview = pv;
  spec.soft_thermal = true;
  OcpTranscription ocp(spec, plant);
  CHECK(ocp.nlp().n_ineq == ocp.n_nodes() * 2 + 2);  // SOC rows stay hard
}

TEST_CASE("standstill horizon costs nothing all-electric") {
  PlantParams plant = make_plant();
  plant.road.p_bat_aux = 0.0;
  SpeedPreview pv = make_preview(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(2), 1.0, 10.0);
  OcpSpec spec;
  spec.x0 = warm_state();
  spec.preview = pv;
  spec.term_lo_frac = 0.5;
  spec.term_hi_frac = 1.5;
  OcpTranscription ocp(spec, plant);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(ocp.n_nodes());
  CHECK(ocp.nlp().objective(z) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ocp.fuel_kg(z) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("node pattern matches the preview resolutions") {
  PlantParams plant = make_plant();
  Eigen::VectorXd vs(4);
  vs << 10.0, 12.0, 13.0, 13.0;
  Eigen::VectorXd vl(2);
  vl << 11.0, 6.0;
  SpeedPreview pv = make_preview(vs, vl, 1.0, 10.0);
  OcpSpec spec;
  spec.x0 = warm_state();
  spec.preview = pv;
  OcpTranscription ocp(spec, plant);
  const OcpNodes& nd = ocp.nodes();
  REQUIRE(nd.n() == 5);
  CHECK(nd.v[0] == 10.0);
  CHECK(nd.a[0] == doctest::Approx(0.0));  // v_prev equals the first sample
  CHECK(nd.d[0] == 1.0);
  CHECK(nd.a[1] == doctest::Approx(2.0));
  CHECK(nd.v[3] == 11.0);
  CHECK(nd.d[3] == 10.0);
  // seam node differences against v_long_prev on the coarse step
  CHECK(nd.a[3] == doctest::Approx((11.0 - 13.0) / 10.0));
  CHECK(nd.a[4] == doctest::Approx((6.0 - 11.0) / 10.0));
}

TEST_CASE("coarse tail at the short resolution collapses to the uniform grid") {
  PlantParams plant = make_plant();
  Eigen::VectorXd v(13);
  for (int k = 0; k < 13; ++k) v[k] = 9.0 + 2.0 * std::sin(0.6 * k);

  // long node j starts at t = 6 + j, so its speed sample is v[6 + j]
  SpeedPreview two = make_preview(v.head(7), v.segment(6, 6), 1.0, 1.0);
  SpeedPreview uni = make_preview(v, Eigen::VectorXd(0), 1.0, 1.0);

  OcpNodes a = ocp_nodes_from_preview(two);
  OcpNodes b = ocp_nodes_from_preview(uni);
  REQUIRE(a.n() == b.n());
  CHECK((a.v - b.v).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.a - b.a).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.d - b.d).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("analytic gradients match finite differences") {
  PlantParams plant = make_plant();
  Eigen::VectorXd vs(6), vl(4);
  vs << 6.0, 9.0, 11.0, 12.0, 10.0, 9.0;
  vl << 10.0, 12.0, 8.0, 4.0;
  SpeedPreview pv = make_preview(vs, vl, 1.0, 10.0);

  for (bool soft : {false, true}) {
    OcpSpec spec;
    spec.x0 = warm_state();
    spec.x0.t_cl = 68.0;
    spec.preview = pv;
    spec.soft_thermal = soft;
    OcpTranscription ocp(spec, plant);
    const NlpProblem& p = ocp.nlp();

    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> un(0.15, 0.85);
    for (int trial = 0; trial < 8; ++trial) {
      Eigen::VectorXd z(p.n());
      for (int i = 0; i < p.n(); ++i) z[i] = p.lb[i] + un(rng) * (p.ub[i] - p.lb[i]);

      Eigen::VectorXd g = p.gradient(z);
      Eigen::VectorXd g_fd = finite_diff_gradient(p.objective, z, 1e-6);
      const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
      CHECK((g - g_fd).cwiseAbs().maxCoeff() / scale < 1e-4);

      Eigen::VectorXd w(p.n_ineq);
      for (int i = 0; i < p.n_ineq; ++i) w[i] = un(rng);
      Eigen::VectorXd gw = p.weighted_constraint_gradient(z, w);
      auto wc = [&](const Eigen::VectorXd& zz) { return w.dot(p.constraints(zz)); };
      Eigen::VectorXd gw_fd = finite_diff_gradient(wc, z, 1e-6);
      const double wscale = std::max(1.0, gw.cwiseAbs().maxCoeff());
      CHECK((gw - gw_fd).cwiseAbs().maxCoeff() / wscale < 1e-4);
    }
  }
}

TEST_CASE("impossible power demand is rejected at transcription") {
  PlantParams plant = make_plant();
  Eigen::VectorXd vs(3);
  vs << 10.0, 38.0, 38.0;  // 28 m/s^2 step, beyond engine plus battery
  SpeedPreview pv = make_preview(vs, Eigen::VectorXd(0), 1.0, 10.0);
  OcpSpec spec;
  spec.x0 = warm_state();
  spec.preview = pv;
  CHECK_THROWS_AS(OcpTranscription(spec, plant), OcpError);
}

// ---------------------------------------------------------------------------
// warm start re-bucketing

TEST_CASE("warm start drops the first node and repeats the last") {
  std::vector<double> prev{0.0, 1.0, 2.0, 3.0, 4.0};
  Eigen::VectorXd vals(5);
  vals << 10.0, 11.0, 12.0, 13.0, 14.0;
  std::vector<double> next{1.0, 2.0, 3.0, 4.0, 5.0};
  Eigen::VectorXd w = warm_start_shift(prev, vals, next);
  REQUIRE(w.size() == 5);
  CHECK(w[0] == 11.0);
  CHECK(w[1] == 12.0);
  CHECK(w[2] == 13.0);
  CHECK(w[3] == 14.0);
  CHECK(w[4] == 14.0);  // past the old horizon
}

TEST_CASE("warm start re-buckets a coarse node crossing into the fine segment") {
  // previous: fine nodes at 0..4, coarse node at 5 lasting 10 s
  std::vector<double> prev{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  Eigen::VectorXd vals(6);
  vals << 1.0, 2.0, 3.0, 4.0, 5.0, 60.0;
  // one second later the fine window reaches 1..5 and 5..6 still sits in the
  // old coarse node
  std::vector<double> next{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  Eigen::VectorXd w = warm_start_shift(prev, vals, next);
  CHECK(w[0] == 2.0);
  CHECK(w[3] == 5.0);
  CHECK(w[4] == 60.0);
  CHECK(w[5] == 60.0);  // interior of the old coarse node
}

TEST_CASE("warm start with no previous solution is all zero") {
  Eigen::VectorXd w = warm_start_shift({}, Eigen::VectorXd(0), {0.0, 1.0});
  CHECK(w.size() == 2);
  CHECK(w.cwiseAbs().maxCoeff() == 0.0);
}

// ---------------------------------------------------------------------------
// receding-horizon controller

TEST_CASE("mpc first move equals the direct solve on the same horizon") {
  PlantParams plant = make_plant();
  // sustained positive demand: holding the terminal SOC band needs fuel
  Eigen::VectorXd vs(6), vl(5);
  vs << 10.0, 11.5, 12.5, 13.0, 12.8, 12.6;
  vl << 12.5, 12.8, 13.0, 13.0, 12.8;
  SpeedPreview pv = make_preview(vs, vl, 1.0, 10.0);
  VehicleState s = warm_state();

  MpcConfig mcfg;
  MpcController mpc(plant, mcfg);
  ControlDecision d = mpc.step(s, pv);
  CHECK(!d.diag.fallback);
  CHECK(!d.diag.soft_thermal);
  CHECK(d.diag.cost > 0.0);
  CHECK(d.diag.wall_time_sec < 1.0);

  OcpSpec spec;
  spec.x0 = s;
  spec.preview = pv;
  spec.bounds = mcfg.bounds;
  OcpTranscription ocp(spec, plant);
  Eigen::VectorXd z = ocp.initial_guess();
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(ocp.nlp().n_ineq);
  SolveReport rep = solve_nlp(ocp.nlp(), z, lam, mcfg.solver);
  REQUIRE(rep.max_violation <= 1e-6);

  const double p0 = ocp.p_from_z(z[0]);
  const double pe0 = ocp.traction_at(0) + plant.road.p_bat_aux - p0;
  if (pe0 >= plant.engine.eps_on) {
    CHECK(d.p_bat == doctest::Approx(p0));
    CHECK(d.engine_on);
    CHECK(d.p_eng == doctest::Approx(pe0));
  } else {
    CHECK(!d.engine_on);
  }
}

TEST_CASE("mpc goes electric when the horizon is cheap") {
  PlantParams plant = make_plant();
  // gentle cruise, warm everything, battery above the terminal band
  Eigen::VectorXd vs = Eigen::VectorXd::Constant(6, 6.0);
  Eigen::VectorXd vl = Eigen::VectorXd::Constant(2, 5.0);
  SpeedPreview pv = make_preview(vs, vl, 1.0, 10.0);
  VehicleState s = warm_state();

  MpcConfig mcfg;
  // wide terminal band: the 25 s of electric cruise barely moves the SOC
  mcfg.term_lo_frac = 0.98;
  mcfg.term_hi_frac = 1.02;
  MpcController mpc(make_plant(), mcfg);
  ControlDecision d = mpc.step(s, pv);
  CHECK(!d.diag.fallback);
  CHECK(!d.engine_on);
  CHECK(d.p_eng == 0.0);
  const double demand = traction_power(6.0, 0.0, plant.road) + plant.road.p_bat_aux;
  CHECK(d.p_bat == doctest::Approx(demand).epsilon(1e-6));
}

TEST_CASE("mpc falls back to the rules when the horizon is impossible") {
  PlantParams plant = make_plant();
  Eigen::VectorXd vs(4);
  vs << 10.0, 10.0, 38.0, 38.0;  // node 1 demands more than both sources
  SpeedPreview pv = make_preview(vs, Eigen::VectorXd(0), 1.0, 10.0);
  VehicleState s = warm_state();

  MpcController mpc(plant, MpcConfig{});
  ControlDecision d = mpc.step(s, pv);
  CHECK(d.diag.fallback);
  CHECK(d.diag.solve_status == SolveStatus::kInfeasible);
  // node 0 is a warm 10 m/s cruise, so the rules pick electric drive
  CHECK(!d.engine_on);
}

TEST_CASE("mpc warm start keeps consecutive steps consistent") {
  PlantParams plant = make_plant();
  Eigen::VectorXd vs(6), vl(4);
  vs << 9.0, 10.0, 11.0, 11.5, 11.0, 10.5;
  vl << 10.0, 9.0, 6.0, 3.0;
  SpeedPreview pv = make_preview(vs, vl, 1.0, 10.0);
  VehicleState s = warm_state();

  MpcController mpc(plant, MpcConfig{});
  ControlDecision d0 = mpc.step(s, pv);
  CHECK(!d0.diag.fallback);
  REQUIRE(mpc.last_p_bat().size() == 9);  // 5 short + 4 long nodes

  // advance the plant one second and shift the preview window
  Control u{d0.p_bat, d0.engine_on};
  VehicleState s1 = integrate_step(s, u, pv.v_short[0],
                                   (pv.v_short[1] - pv.v_short[0]) / pv.dt1, pv.dt1, plant);
  Eigen::VectorXd vs1(6);
  vs1 << 10.0, 11.0, 11.5, 11.0, 10.5, 10.2;
  Eigen::VectorXd vl1(4);
  vl1 << 10.0, 9.0, 6.0, 3.0;
  SpeedPreview pv1 = make_preview(vs1, vl1, 1.0, 10.0);
  pv1.t_now = 1.0;
  pv1.t_end = pv.t_end;
  pv1.v_prev = 9.0;

  ControlDecision d1 = mpc.step(s1, pv1);
  CHECK(!d1.diag.fallback);
  CHECK(d1.diag.wall_time_sec < 1.0);
  CHECK(std::abs(d1.p_bat) < 45e3);

  mpc.reset();
  CHECK(mpc.last_p_bat().size() == 0);
}

TEST_CASE("mpc decisions are deterministic") {
  PlantParams plant = make_plant();
  Eigen::VectorXd vs(6), vl(3);
  vs << 8.0, 9.0, 10.0, 10.5, 10.0, 9.5;
  vl << 9.0, 7.0, 4.0;
  SpeedPreview pv = make_preview(vs, vl, 1.0, 10.0);
  VehicleState s = warm_state();

  MpcController a(plant, MpcConfig{});
  MpcController b(plant, MpcConfig{});
  ControlDecision da = a.step(s, pv);
  ControlDecision db = b.step(s, pv);
  CHECK(da.p_bat == db.p_bat);
  CHECK(da.p_eng == db.p_eng);
  CHECK(da.engine_on == db.engine_on);
}
