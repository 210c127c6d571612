#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "contraction/linalg.hpp"

namespace contraction {

// h(p, x, t) with p = ∇φ. Second-derivative layout: d2h_dxdp(i, j) = ∂²h/∂x_i∂p_j.
struct Hamiltonian {
  using Scalar = std::function<double(const Vec& p, const Vec& x, double t)>;
  using Vector = std::function<Vec(const Vec& p, const Vec& x, double t)>;
  using Matrix = std::function<Mat(const Vec& p, const Vec& x, double t)>;

  int dim = 1;
  Scalar h;
  Vector dh_dx;
  Vector dh_dp;
  Matrix d2h_dx2;
  Matrix d2h_dxdp;
  Matrix d2h_dp2;
};

// Fills missing second derivatives by central differences of the first
// derivatives (step 1e-5·max(1,|v|)).
Hamiltonian with_finite_difference_hessians(Hamiltonian ham);

struct HamiltonianCheck {
  double symmetry_residual = 0.0;
  double first_derivative_residual = 0.0;
  double second_derivative_residual = 0.0;
};

// Compares the derivative callables with finite differences at (p, x, t).
// `validate_hamiltonian` throws DerivativeMismatch above 1e-5 relative.
HamiltonianCheck check_hamiltonian(const Hamiltonian& ham, const Vec& p, const Vec& x, double t);
void validate_hamiltonian(const Hamiltonian& ham, const Vec& p, const Vec& x, double t);

enum class Direction { Forward, Backward };

inline double direction_sign(Direction d) { return d == Direction::Forward ? 1.0 : -1.0; }

struct CharState {
  Vec x;
  Vec p;
  Mat H;  // ∇∇φ
  double t = 0.0;
};

// Carries H⁻¹ in place of H.
struct InverseCharState {
  Vec x;
  Vec p;
  Mat H_inv;
  double t = 0.0;
};

// Inverts H, throwing SingularHessian when it is not invertible.
InverseCharState invert(const CharState& s);

// RK4 step of ẋ = h_p, ṗ = −h_x and the Hessian Riccati equation. Backward
// steps move t to t − dt.
CharState characteristic_step(const Hamiltonian& ham, const CharState& s, double dt, Direction direction);

// RK4 step of d(H⁻¹)/dt = H⁻¹h_xxH⁻¹ + H⁻¹h_xp + h_pxH⁻¹ + h_pp together with x and p.
InverseCharState inverse_riccati_step(const Hamiltonian& ham, const InverseCharState& s, double dt,
                                      Direction direction);

// Integrates `steps` steps and returns every state including the first.
std::vector<CharState> integrate_characteristic(const Hamiltonian& ham, const CharState& s0, double dt, int steps,
                                                Direction direction);

struct LieResult {
  // 1-based derivative order at which the chain becomes positive on the
  // nullspace left by lower orders; empty when it never does within j_max.
  std::optional<int> order;
  std::string report;
};

// Chain L⁰ = −s·h_xx, L^{j+1} = d/dτ Lʲ − s(h_xp Lʲ + Lʲ h_px) with τ = s·t
// along the direction of integration. The trajectory must be equally spaced.
LieResult lie_condition_x(const Hamiltonian& ham, const std::vector<CharState>& trajectory, int j_max,
                          Direction direction);
// Chain L⁰ = s·h_pp, L^{j+1} = d/dτ Lʲ + s(h_px Lʲ + Lʲ h_xp).
LieResult lie_condition_p(const Hamiltonian& ham, const std::vector<CharState>& trajectory, int j_max,
                          Direction direction);

// Nested-nullspace order of a chain of symmetric matrices (exposed for tests).
std::optional<int> nested_positivity_order(const std::vector<Mat>& chain);

inline constexpr double kConvexityTolerance = 1e-8;

struct ConvexityReport {
  std::vector<CharState> trajectory;
  std::vector<double> min_eig;
  std::optional<double> lost_at;  // first time min eig H < −1e-8
  bool semidefinite = false;      // min eig touched zero without going negative
  bool escaped = false;           // H blew up; lost_at is the step where it did
};

ConvexityReport convexity_monitor(const Hamiltonian& ham, const CharState& s0, double t_span, double dt,
                                  Direction direction);

// Columns t, x_i, p_i, eig_i (ascending eigenvalues of H).
void write_characteristic_csv(const std::string& path, const std::vector<CharState>& trajectory);

}  // namespace contraction
