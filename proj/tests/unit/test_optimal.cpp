#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "contraction/error.hpp"
#include "contraction/optimal.hpp"

using namespace contraction;

namespace {

Mat m1(double a) { return Mat::Constant(1, 1, a); }

// ‖H_hjb − P_oracle‖∞ over the shared half-step grid.
double riccati_gap(const HjbSolution& sol, const LqOracle& o) {
  REQUIRE(sol.t.size() == o.t.size());
  double gap = 0.0;
  for (std::size_t k = 0; k < sol.t.size(); ++k) {
    const std::size_t j = o.t.size() - 1 - k;
    REQUIRE(sol.t[k] == doctest::Approx(o.t[j]));
    gap = std::max(gap, (sol.H[k] - o.P[j]).cwiseAbs().maxCoeff());
  }
  return gap;
}

}  // namespace

TEST_CASE("scalar LQ: characteristic Hessian equals the Riccati solution") {
  const auto cp = ControlProblem::linear_quadratic(m1(0.0), m1(1.0), m1(1.0), m1(1.0), m1(0.2), 10.0);
  const auto sols = hjb_solve(cp, {Vec::Ones(1)}, 0.01);
  REQUIRE(sols.size() == 1);
  const auto& sol = sols.front();
  CHECK(riccati_gap(sol, lq_oracle(m1(0.0), m1(1.0), m1(1.0), m1(1.0), m1(0.2), 10.0, 0.005)) < 1e-6);
  // backward fixed point of −Ṗ = 1 − P²
  CHECK(std::abs(sol.H.front()(0, 0) - 1.0) < 1e-8);
  CHECK(sol.gain.front()(0, 0) == doctest::Approx(sol.H.front()(0, 0)));
  CHECK(sol.shooting_residual < 1e-10);
  // optimal cost from x0 = 1 is ½P(0)
  CHECK(sol.cost == doctest::Approx(0.5).epsilon(1e-6));
  const auto cl = closed_loop_contraction_check(cp, sol);
  CHECK(cl.classification == Classification::Contracting);
  CHECK(cl.rate == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("double integrator LQ") {
  Mat A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  const Mat I = Mat::Identity(2, 2);
  const auto cp = ControlProblem::linear_quadratic(A, B, I, m1(1.0), I, 10.0);
  Vec x0(2);
  x0 << 1.0, -0.5;
  const auto sol = hjb_solve(cp, {x0}, 0.01).front();
  CHECK(riccati_gap(sol, lq_oracle(A, B, I, m1(1.0), I, 10.0, 0.005)) < 1e-6);
  // algebraic Riccati solution [[√3, 1], [1, √3]]
  CHECK(sol.H.front()(0, 0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-6));
  CHECK(sol.H.front()(0, 1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.cost == doctest::Approx(0.5 * x0.dot(sol.H.front() * x0)).epsilon(1e-5));
}

TEST_CASE("optimal control and its failure modes") {
  const auto cp = ControlProblem::linear_quadratic(m1(0.0), m1(2.0), m1(1.0), m1(4.0), m1(0.0), 1.0);
  // u* = −Q⁻¹Bᵀp
  CHECK(optimal_control(cp, Vec::Ones(1), Vec::Zero(1), 0.0)(0) == doctest::Approx(-0.5));
  ControlProblem no_cost = cp;
  no_cost.cost.reset();
  CHECK_THROWS_AS(synthesize_hamiltonian_control(no_cost), Error);
  ControlProblem non_affine = cp;
  non_affine.control_affine = false;
  CHECK_THROWS_AS(synthesize_hamiltonian_control(non_affine), Error);
}

TEST_CASE("nonlinear plant uses finite-difference Hessians") {
  ControlProblem cp;
  cp.n_state = 2;
  cp.f = [](const Vec& x, const Vec& u, double) {
    Vec d(2);
    d << x(1), -std::sin(x(0)) + u(0);
    return d;
  };
  cp.df_dx = [](const Vec& x, const Vec&, double) {
    Mat d(2, 2);
    d << 0, 1, -std::cos(x(0)), 0;
    return d;
  };
  cp.df_du = [](const Vec&, const Vec&, double) { return Mat((Mat(2, 1) << 0, 1).finished()); };
  cp.cost = QuadraticCost{Mat::Identity(2, 2), m1(1.0), {}, {}};
  cp.terminal = [](const Vec& x) { return 0.5 * x.squaredNorm(); };
  cp.terminal_grad = [](const Vec& x) { return x; };
  cp.terminal_hessian = [](const Vec&) { return Mat::Identity(2, 2).eval(); };
  cp.t_f = 3.0;
  Vec x0(2);
  x0 << 0.3, 0.0;
  const auto sol = hjb_solve(cp, {x0}, 0.01).front();
  CHECK(sol.shooting_residual < 1e-6);
  CHECK_FALSE(sol.convexity_lost);
  // small angle: close to the linearized Riccati solution
  Mat A(2, 2), B(2, 1);
  A << 0, 1, -1, 0;
  B << 0, 1;
  const auto o = lq_oracle(A, B, Mat::Identity(2, 2), m1(1.0), Mat::Identity(2, 2), 3.0, 0.005);
  CHECK((sol.H.front() - o.P.back()).cwiseAbs().maxCoeff() < 0.05);
  // the optimum beats a zero control
  const std::vector<Vec> zero(sol.u.size(), Vec::Zero(1));
  CHECK(sol.cost < simulate_open_loop(cp, x0, 0.01, zero).cost);
}

TEST_CASE("observer matches the Kalman-Bucy oracle") {
  Mat A(2, 2), C(1, 2);
  A << 0, 1, -1, -0.5;
  C << 1, 0;
  const Mat B = Mat::Identity(2, 2), Qd = Mat::Identity(2, 2), Rm = m1(2.0);
  const Mat Pi0 = 0.5 * Mat::Identity(2, 2);
  const Vec xhat0 = Vec::Zero(2);
  const auto op = ObserverProblem::linear(A, B, C, Rm, Qd, Pi0, xhat0);
  MeasurementStream ym;
  for (int k = 0; k <= 500; ++k) {
    ym.t.push_back(0.01 * k);
    ym.y.push_back(Vec::Constant(1, std::cos(0.01 * k)));
  }
  const auto run = run_observer(op, ym, 0.0, 5.0, 0.01);
  const auto kb = kalman_bucy_oracle(A, B, C, Rm, Qd, Pi0.inverse(), xhat0, ym, 0.0, 5.0, 0.01);
  REQUIRE(run.estimates.size() == kb.x_hat.size());
  double gx = 0.0, gp = 0.0;
  for (std::size_t k = 0; k < kb.x_hat.size(); ++k) {
    gx = std::max(gx, (run.estimates[k].x_hat - kb.x_hat[k]).cwiseAbs().maxCoeff());
    gp = std::max(gp, (run.estimates[k].Pi.inverse() - kb.P[k]).cwiseAbs().maxCoeff());
  }
  CHECK(gx < 1e-6);
  CHECK(gp < 1e-6);
}

TEST_CASE("information matrix without measurements") {
  // Π̇ = −Π²/q, so Π = Π₀/(1 + Π₀t/q)
  const double q = 2.0, pi0 = 3.0;
  const auto op = ObserverProblem::linear(m1(0.0), m1(1.0), m1(1.0), m1(0.0), m1(q), m1(pi0), Vec::Zero(1));
  MeasurementStream ym;
  ym.t = {0.0};
  ym.y = {Vec::Zero(1)};
  const auto run = run_observer(op, ym, 0.0, 4.0, 0.01);
  double err = 0.0;
  for (const auto& e : run.estimates) err = std::max(err, std::abs(e.Pi(0, 0) - pi0 / (1.0 + pi0 * e.t / q)));
  CHECK(err < 1e-8);
}

TEST_CASE("observer Hamiltonian curvature") {
  const auto op = ObserverProblem::linear(m1(-1.0), m1(1.0), m1(2.0), m1(3.0), m1(0.5), m1(1.0), Vec::Zero(1));
  const Hamiltonian h = observer_hamiltonian(op, Vec::Ones(1));
  // h_xx = −CᵀRC, h_pp = BQ⁻¹Bᵀ
  CHECK(h.d2h_dx2(Vec::Zero(1), Vec::Zero(1), 0.0)(0, 0) == doctest::Approx(-12.0));
  CHECK(h.d2h_dp2(Vec::Zero(1), Vec::Zero(1), 0.0)(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("singular information is reported") {
  const auto op = ObserverProblem::linear(m1(0.0), m1(1.0), m1(1.0), m1(1.0), m1(1.0), m1(1.0), Vec::Zero(1));
  const Estimate bad{Vec::Zero(1), m1(0.0), 0.0};
  CHECK_THROWS_AS(observer_step(op, bad, Vec::Zero(1), 0.01), Error);
}

TEST_CASE("measurement stream csv round trip and hold") {
  MeasurementStream s;
  s.t = {0.0, 0.5, 1.0};
  s.y = {Vec::Constant(1, 1.0), Vec::Constant(1, 2.0), Vec::Constant(1, 3.0)};
  const auto path = (std::filesystem::temp_directory_path() / "contraction_meas.csv").string();
  s.write_csv(path);
  const auto back = MeasurementStream::read_csv(path);
  REQUIRE(back.t.size() == 3);
  CHECK(back.at(0.7)(0) == 2.0);
  CHECK(back.at(2.0)(0) == 3.0);
  CHECK_THROWS_AS(MeasurementStream::read_csv("/nonexistent/dir/m.csv"), Error);
}
