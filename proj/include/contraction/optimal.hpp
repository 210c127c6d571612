#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "contraction/certificates.hpp"
#include "contraction/hamilton.hpp"

namespace contraction {

using PlantFn = std::function<Vec(const Vec& x, const Vec& u, double t)>;
using PlantJacobianFn = std::function<Mat(const Vec& x, const Vec& u, double t)>;
using TimeVecFn = std::function<Vec(double t)>;
using TimeMatFn = std::function<Mat(double t)>;

// ℓ = ½(x−x_d)ᵀR(x−x_d) + ½(u−u_d)ᵀQ(u−u_d).
struct QuadraticCost {
  Mat state_weight;    // R
  Mat control_weight;  // Q
  TimeVecFn x_d;       // empty means 0
  TimeVecFn u_d;       // empty means 0
};

struct ControlProblem {
  int n_state = 1;
  int n_control = 1;
  PlantFn f;
  PlantJacobianFn df_dx;
  PlantJacobianFn df_du;
  // f = f₀(x,t) + B(x,t)u; required for the closed-form minimizer.
  bool control_affine = true;
  std::optional<QuadraticCost> cost;

  // Set for linear plants ẋ = A(t)x + B(t)u; enables exact Hessians.
  TimeMatFn A;
  TimeMatFn B;

  std::function<double(const Vec&)> terminal;
  std::function<Vec(const Vec&)> terminal_grad;
  std::function<Mat(const Vec&)> terminal_hessian;

  double t0 = 0.0;
  double t_f = 1.0;

  [[nodiscard]] Vec x_d(double t) const;
  [[nodiscard]] Vec u_d(double t) const;
  [[nodiscard]] double running_cost(const Vec& x, const Vec& u, double t) const;

  // ẋ = A(t)x + B(t)u with quadratic cost and terminal cost ½xᵀP_f x.
  static ControlProblem linear_quadratic(TimeMatFn A, TimeMatFn B, const Mat& state_weight,
                                         const Mat& control_weight, const Mat& P_f, double t_f);
  static ControlProblem linear_quadratic(const Mat& A, const Mat& B, const Mat& state_weight,
                                         const Mat& control_weight, const Mat& P_f, double t_f);
};

// Minimizer of h over u: u* = u_d − Q⁻¹(∂f/∂u)ᵀp.
Vec optimal_control(const ControlProblem& cp, const Vec& p, const Vec& x, double t);

// Reduced controller Hamiltonian h(p, x, t) = ℓ(x, u*, t) + p·f(x, u*, t).
Hamiltonian synthesize_hamiltonian_control(const ControlProblem& cp);

struct HjbSolution {
  Vec x0;
  std::vector<double> t;  // forward grid at half steps, t0 … t_f
  std::vector<Vec> x;
  std::vector<Vec> p;
  std::vector<Vec> u;
  std::vector<Mat> H;
  std::vector<Mat> gain;  // Q⁻¹(∂f/∂u)ᵀH
  std::vector<CharState> backward;  // the shooting characteristic, t_f down to t0
  double cost = 0.0;
  double shooting_residual = 0.0;
  bool convexity_lost = false;
  std::optional<double> lost_at;

  void write_csv(const std::string& path) const;
};

// Characteristics integrated backward from t_f with p = ∇φ_f, H = ∇∇φ_f at a
// terminal state found by Newton shooting, then replayed forward with
// p ≈ p_c + H(x − x_c).
std::vector<HjbSolution> hjb_solve(const ControlProblem& cp, const std::vector<Vec>& x0_set, double dt);

struct OpenLoopResult {
  std::vector<Vec> x;
  double cost = 0.0;
};

// RK4 under a control sampled on the half-step grid (2N+1 samples), with
// Simpson quadrature of the running cost plus the terminal cost.
OpenLoopResult simulate_open_loop(const ControlProblem& cp, const Vec& x0, double dt, const std::vector<Vec>& u);

struct ClosedLoopReport {
  std::vector<double> t;
  std::vector<double> min_eig_W;
  std::vector<double> min_eig_H;
  // ½·min generalized eigenvalue of (W, H): the contraction rate in the metric H.
  double rate = 0.0;
  Classification classification = Classification::Inconclusive;
};

// W = h_xx − H h_pp H, from d/dt(δxᵀHδx) = −δxᵀWδx along the closed loop.
ClosedLoopReport closed_loop_contraction_check(const ControlProblem& cp, const HjbSolution& solved);

struct ObserverProblem {
  int n_state = 1;
  int n_meas = 1;
  int n_dist = 1;
  std::function<Vec(const Vec& x, double t)> f;  // drift f₀
  std::function<Mat(const Vec& x, double t)> df_dx;
  std::function<Vec(const Vec& x, double t)> y;
  std::function<Mat(const Vec& x, double t)> dy_dx;
  Mat B;                   // disturbance input
  Mat measurement_weight;  // R
  Mat disturbance_weight;  // Q
  Mat Pi0;
  Vec x_hat0;

  static ObserverProblem linear(const Mat& A, const Mat& B, const Mat& C, const Mat& measurement_weight,
                                const Mat& disturbance_weight, const Mat& Pi0, const Vec& x_hat0);
};

// Observer Hamiltonian h = −ℓ + p·f with w* = Q⁻¹Bᵀp, for a frozen measurement.
Hamiltonian observer_hamiltonian(const ObserverProblem& op, const Vec& y_m);

struct Estimate {
  Vec x_hat;
  Mat Pi;
  double t = 0.0;
};

// One RK4 step of x̂̇ = f(x̂) + Π⁻¹CᵀR(y_m − y(x̂)) and
// Π̇ = CᵀRC − AᵀΠ − ΠA − ΠBQ⁻¹BᵀΠ with y_m held over the step.
Estimate observer_step(const ObserverProblem& op, const Estimate& est, const Vec& y_m, double dt);

struct MeasurementStream {
  std::vector<double> t;
  std::vector<Vec> y;

  // Zero-order hold: latest sample at or before t.
  [[nodiscard]] Vec at(double time) const;
  static MeasurementStream read_csv(const std::string& path);
  void write_csv(const std::string& path) const;
};

struct ObserverRun {
  std::vector<Estimate> estimates;
  std::vector<Mat> gain;  // Π⁻¹CᵀR

  void write_csv(const std::string& path) const;
};

ObserverRun run_observer(const ObserverProblem& op, const MeasurementStream& ym, double t0, double t1, double dt);

struct LqOracle {
  std::vector<double> t;  // t_f down to 0
  std::vector<Mat> P;
  std::vector<Mat> K;  // R⁻¹BᵀP (standard naming: Q state weight, R control weight)
};

// Classical −Ṗ = AᵀP + PA − PBR⁻¹BᵀP + Q integrated backward with RK4,
// independent of the characteristic code.
LqOracle lq_oracle(const TimeMatFn& A, const Mat& B, const Mat& Q_cost, const Mat& R_cost, const Mat& P_f,
                   double horizon, double dt);
LqOracle lq_oracle(const Mat& A, const Mat& B, const Mat& Q_cost, const Mat& R_cost, const Mat& P_f, double horizon,
                   double dt);

struct KalmanRun {
  std::vector<double> t;
  std::vector<Vec> x_hat;
  std::vector<Mat> P;  // covariance

  // Same columns as ObserverRun, with Pi = P⁻¹ so the files compare directly.
  void write_csv(const std::string& path, const Mat& C, const Mat& measurement_weight) const;
};

// Covariance-form Kalman-Bucy filter Ṗ = AP + PAᵀ + BQ⁻¹Bᵀ − PCᵀRCP,
// x̂̇ = Ax̂ + PCᵀR(y − Cx̂). Validation oracle for the observer.
KalmanRun kalman_bucy_oracle(const Mat& A, const Mat& B, const Mat& C, const Mat& measurement_weight,
                             const Mat& disturbance_weight, const Mat& P0, const Vec& x_hat0,
                             const MeasurementStream& ym, double t0, double t1, double dt);

}  // namespace contraction
