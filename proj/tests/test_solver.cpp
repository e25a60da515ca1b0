#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "hev/dp.hpp"
#include "hev/nlp.hpp"
#include "hev/ocp.hpp"

using namespace hev;

namespace {

PlantParams make_plant() {
  PlantParams p;
  p.engine.build();
  p.validate();
  return p;
}

NlpProblem quadratic_1d(double lo, double hi) {
  NlpProblem p;
  p.lb = Eigen::VectorXd::Constant(1, lo);
  p.ub = Eigen::VectorXd::Constant(1, hi);
  p.n_ineq = 0;
  p.objective = [](const Eigen::VectorXd& z) { return (z[0] - 3.0) * (z[0] - 3.0); };
  p.gradient = [](const Eigen::VectorXd& z) {
    return Eigen::VectorXd::Constant(1, 2.0 * (z[0] - 3.0)).eval();
  };
  p.constraints = [](const Eigen::VectorXd&) { return Eigen::VectorXd(0); };
  p.weighted_constraint_gradient = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::VectorXd::Zero(1).eval();
  };
  return p;
}

}  // namespace

TEST_CASE("unconstrained quadratic lands on the minimizer") {
  NlpProblem p = quadratic_1d(0.0, 10.0);
  Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 9.0);
  Eigen::VectorXd lam(0);
  SolveReport rep = solve_nlp(p, z, lam);
  CHECK(rep.ok());
  CHECK(z[0] == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(rep.objective == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("active box bound stops the step and reports a KKT point") {
  NlpProblem p = quadratic_1d(0.0, 2.0);
  Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 0.5);
  Eigen::VectorXd lam(0);
  SolveReport rep = solve_nlp(p, z, lam);
  CHECK(rep.ok());
  CHECK(z[0] == doctest::Approx(2.0).epsilon(1e-10));
  KktReport kkt = check_kkt(p, z, lam);
  CHECK(kkt.residual() < 1e-6);
}

TEST_CASE("inequality constraint is tracked through the multiplier") {
  // min z^2  s.t. 1 - z <= 0, box [-5, 5]: solution z = 1, lambda = 2
  NlpProblem p;
  p.lb = Eigen::VectorXd::Constant(1, -5.0);
  p.ub = Eigen::VectorXd::Constant(1, 5.0);
  p.n_ineq = 1;
  p.objective = [](const Eigen::VectorXd& z) { return z[0] * z[0]; };
  p.gradient = [](const Eigen::VectorXd& z) {
    return Eigen::VectorXd::Constant(1, 2.0 * z[0]).eval();
  };
  p.constraints = [](const Eigen::VectorXd& z) {
    return Eigen::VectorXd::Constant(1, 1.0 - z[0]).eval();
  };
  p.weighted_constraint_gradient = [](const Eigen::VectorXd&, const Eigen::VectorXd& w) {
    return Eigen::VectorXd::Constant(1, -w[0]).eval();
  };
  Eigen::VectorXd z = Eigen::VectorXd::Constant(1, -4.0);
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(1);
  SolveReport rep = solve_nlp(p, z, lam);
  CHECK(rep.ok());
  CHECK(z[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(lam[0] == doctest::Approx(2.0).epsilon(1e-3));
  KktReport kkt = check_kkt(p, z, lam);
  CHECK(kkt.stationarity < 1e-4);
  CHECK(kkt.feasibility < 1e-6);
  CHECK(kkt.complementarity < 1e-4);
}

TEST_CASE("two-variable problem with coupled constraint") {
  // min (z0-2)^2 + (z1+1)^2  s.t. z0 + z1 <= 0: solution (1.5, -1.5), lambda = 1
  NlpProblem p;
  p.lb = Eigen::VectorXd::Constant(2, -10.0);
  p.ub = Eigen::VectorXd::Constant(2, 10.0);
  p.n_ineq = 1;
  p.objective = [](const Eigen::VectorXd& z) {
    return (z[0] - 2.0) * (z[0] - 2.0) + (z[1] + 1.0) * (z[1] + 1.0);
  };
  p.gradient = [](const Eigen::VectorXd& z) {
    Eigen::VectorXd g(2);
    g << 2.0 * (z[0] - 2.0), 2.0 * (z[1] + 1.0);
    return g;
  };
  p.constraints = [](const Eigen::VectorXd& z) {
    return Eigen::VectorXd::Constant(1, z[0] + z[1]).eval();
  };
  p.weighted_constraint_gradient = [](const Eigen::VectorXd&, const Eigen::VectorXd& w) {
    return Eigen::VectorXd::Constant(2, w[0]).eval();
  };
  Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(1);
  SolveReport rep = solve_nlp(p, z, lam);
  CHECK(rep.ok());
  CHECK(z[0] == doctest::Approx(1.5).epsilon(1e-5));
  CHECK(z[1] == doctest::Approx(-1.5).epsilon(1e-5));
  CHECK(check_kkt(p, z, lam).residual() < 1e-4);
}

TEST_CASE("unsatisfiable constraint reports infeasible without throwing") {
  NlpProblem p;
  p.lb = Eigen::VectorXd::Constant(1, -1.0);
  p.ub = Eigen::VectorXd::Constant(1, 1.0);
  p.n_ineq = 1;
  p.objective = [](const Eigen::VectorXd& z) { return z[0] * z[0]; };
  p.gradient = [](const Eigen::VectorXd& z) {
    return Eigen::VectorXd::Constant(1, 2.0 * z[0]).eval();
  };
  p.constraints = [](const Eigen::VectorXd& z) {
    return Eigen::VectorXd::Constant(1, z[0] * z[0] + 1.0).eval();
  };
  p.weighted_constraint_gradient = [](const Eigen::VectorXd& z, const Eigen::VectorXd& w) {
    return Eigen::VectorXd::Constant(1, 2.0 * z[0] * w[0]).eval();
  };
  Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 0.3);
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(1);
  SolveOptions opts;
  opts.max_outer = 12;
  SolveReport rep = solve_nlp(p, z, lam, opts);
  CHECK(rep.status == SolveStatus::kInfeasible);
  CHECK(rep.max_violation > 0.9);
}

TEST_CASE("solver is deterministic across repeated runs") {
  NlpProblem p = quadratic_1d(0.0, 10.0);
  Eigen::VectorXd z1 = Eigen::VectorXd::Constant(1, 7.7), z2 = z1;
  Eigen::VectorXd l1(0), l2(0);
  SolveReport r1 = solve_nlp(p, z1, l1);
  SolveReport r2 = solve_nlp(p, z2, l2);
  CHECK(z1[0] == z2[0]);
  CHECK(r1.inner_iterations == r2.inner_iterations);
  CHECK(r1.outer_iterations == r2.outer_iterations);
}

TEST_CASE("finite difference gradient agrees with the analytic one") {
  auto f = [](const Eigen::VectorXd& z) {
    return std::sin(z[0]) * z[1] + 0.5 * z[1] * z[1];
  };
  Eigen::VectorXd z(2);
  z << 0.7, -1.3;
  Eigen::VectorXd g = finite_diff_gradient(f, z);
  CHECK(g[0] == doctest::Approx(std::cos(0.7) * -1.3).epsilon(1e-6));
  CHECK(g[1] == doctest::Approx(std::sin(0.7) - 1.3).epsilon(1e-6));
}

TEST_CASE("status names round-trip") {
  CHECK(std::string(to_string(SolveStatus::kOptimal)) == "optimal");
  CHECK(std::string(to_string(SolveStatus::kIterLimit)) == "max_iter");
  CHECK(std::string(to_string(SolveStatus::kInfeasible)) == "infeasible");
  CHECK(std::string(to_string(SolveStatus::kTimeBudget)) == "time_budget");
}

// ---------------------------------------------------------------------------
// dynamic-programming reference

TEST_CASE("dp rejects grids beyond the cell budget") {
  DpProblem pb;
  pb.plant = make_plant();
  pb.v = Eigen::VectorXd::Constant(5, 10.0);
  pb.a = Eigen::VectorXd::Zero(5);
  pb.dt = Eigen::VectorXd::Constant(5, 1.0);
  pb.grid_soc.n = 101;
  pb.grid_t_cl.n = 101;
  pb.grid_t_cat.n = 101;
  VehicleState x0;
  CHECK_THROWS_AS(dp_oracle(pb, x0), DpError);
}

TEST_CASE("dp on a standstill trip burns no fuel") {
  DpProblem pb;
  pb.plant = make_plant();
  pb.plant.road.p_bat_aux = 0.0;
  pb.plant.thermal.heating_enabled = false;
  pb.v = Eigen::VectorXd::Zero(6);
  pb.a = Eigen::VectorXd::Zero(6);
  pb.dt = Eigen::VectorXd::Constant(6, 1.0);
  pb.t_cl_min = 0.0;  // no warmup pressure at standstill
  pb.grid_t_cl.lo = 0.0;
  pb.terminal_soc_lo = 0.55;
  pb.terminal_soc_hi = 0.65;
  pb.n_controls = 15;  // puts 0 W on the control grid
  VehicleState x0;
  x0.soc = 0.6;
  x0.t_cl = 70.0;
  x0.t_cat = 350.0;
  DpResult res = dp_oracle(pb, x0);
  REQUIRE(res.feasible);
  CHECK(res.fuel_kg == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(res.p_bat.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("dp result replays within the stated bounds") {
  DpProblem pb;
  pb.plant = make_plant();
  const int n = 20;
  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k) v[k] = 8.0 + 4.0 * std::sin(0.4 * k);
  Eigen::VectorXd vn(n + 1);
  vn.head(n) = v;
  vn[n] = 0.0;
  pb.v = v;
  pb.a = (vn.tail(n) - vn.head(n));
  pb.dt = Eigen::VectorXd::Constant(n, 1.0);
  pb.terminal_soc_lo = 0.55;
  pb.terminal_soc_hi = 0.65;
  pb.grid_soc = {0.5, 0.7, 21};
  pb.grid_t_cl = {60.0, 95.0, 11};
  pb.grid_t_cat = {250.0, 600.0, 11};
  VehicleState x0;
  x0.soc = 0.6;
  x0.t_cl = 75.0;
  x0.t_cat = 380.0;
  DpResult res = dp_oracle(pb, x0);
  REQUIRE(res.feasible);
  CHECK(res.fuel_kg > 0.0);
  REQUIRE(res.states.size() == static_cast<size_t>(n + 1));
  for (const VehicleState& s : res.states) {
    CHECK(s.soc > pb.soc_min - 1e-9);
    CHECK(s.soc < pb.soc_max + 1e-9);
  }
  const double soc_T = res.states.back().soc;
  CHECK(soc_T > pb.terminal_soc_lo - 1e-9);
  CHECK(soc_T < pb.terminal_soc_hi + 1e-9);

  DpResult res2 = dp_oracle(pb, x0);
  CHECK(res.fuel_kg == res2.fuel_kg);  // deterministic
}

// ---------------------------------------------------------------------------
// transcription solved against the dp reference

TEST_CASE("short horizon solve matches dp within one percent") {
  PlantParams plant = make_plant();

  const int n = 12;
  Eigen::VectorXd vs(n + 1);
  for (int k = 0; k <= n; ++k) vs[k] = 9.0 + 3.0 * std::sin(0.5 * k);

  SpeedPreview pv;
  pv.t_now = 0.0;
  pv.t_end = n;
  pv.dt1 = 1.0;
  pv.dt2 = 1.0;
  pv.v_prev = vs[0];
  pv.v_short = vs;
  pv.v_long = Eigen::VectorXd(0);

  OcpSpec spec;
  spec.x0.soc = 0.6;
  spec.x0.t_cl = 75.0;
  spec.x0.t_cat = 380.0;
  spec.preview = pv;
  spec.term_lo_frac = 0.9;  // wide band so both methods chase fuel, not the band edge
  spec.term_hi_frac = 1.1;

  OcpTranscription ocp(spec, plant);
  Eigen::VectorXd z = ocp.initial_guess();
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(ocp.nlp().n_ineq);
  SolveOptions opts;
  opts.tol_stationarity = 1e-5;
  opts.max_inner = 400;
  SolveReport rep = solve_nlp(ocp.nlp(), z, lam, opts);
  REQUIRE(rep.status != SolveStatus::kInfeasible);
  CHECK(rep.max_violation < 1e-6);

  DpProblem pb;
  pb.plant = plant;
  const OcpNodes& nd = ocp.nodes();
  pb.v = nd.v;
  pb.a = nd.a;
  pb.dt = nd.d;
  pb.terminal_soc_lo = 0.54;
  pb.terminal_soc_hi = 0.66;
  pb.grid_soc = {0.5, 0.7, 81};
  pb.grid_t_cl = {60.0, 95.0, 11};
  pb.grid_t_cat = {250.0, 600.0, 11};
  pb.n_controls = 41;
  DpResult dp = dp_oracle(pb, spec.x0);
  REQUIRE(dp.feasible);

  // smooth solver should do at least as well as the coarse grid, up to 1%
  CHECK(ocp.fuel_kg(z) <= dp.fuel_kg * 1.01 + 1e-6);
}
