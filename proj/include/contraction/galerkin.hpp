#pragma once

#include <functional>
#include <string>
#include <vector>

#include "contraction/dynamics.hpp"

namespace contraction {

struct BasisFunction {
  std::string label;
  std::function<Vec(const Vec& x, double t)> value;  // n-vector
  std::function<Mat(const Vec& x, double t)> grad;   // n×m
  std::function<Vec(const Vec& x, double t)> dt;     // empty for static functions
};

// Basis functions with their coefficients, sampled on a quadrature grid.
class BasisSet {
 public:
  BasisSet(Grid grid, int n_state, std::vector<BasisFunction> functions = {}, Vec coefficients = Vec());

  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] int n_state() const { return n_state_; }
  [[nodiscard]] int size() const { return static_cast<int>(functions_.size()); }
  [[nodiscard]] const std::vector<BasisFunction>& functions() const { return functions_; }
  [[nodiscard]] const Vec& coefficients() const { return a_; }
  void set_coefficients(const Vec& a);
  [[nodiscard]] bool is_static() const;

  // Node values of w_k as an n×N matrix.
  [[nodiscard]] Mat values(int k, double t) const;
  // Gradient of w_k along `axis` at every node, n×N.
  [[nodiscard]] Mat gradients(int k, int axis, double t) const;
  [[nodiscard]] Mat time_derivative(int k, double t) const;

 private:
  Grid grid_;
  int n_state_;
  std::vector<BasisFunction> functions_;
  Vec a_;
  // Samples of static functions, filled at construction.
  std::vector<Mat> value_cache_;
  std::vector<std::vector<Mat>> grad_cache_;
};

// ∫wᵀw dV by trapezoidal quadrature; DegenerateBasis above condition 1e12.
Mat mass_matrix(const BasisSet& basis, double t = 0.0);

// Throws BasisBoundaryViolation when a basis function does not vanish on a Dirichlet face.
void check_basis_boundary(const BasisSet& basis, const BoundarySpec& bounds, double t = 0.0);

// Coefficient rates from the weak form: M ȧ = −∫wᵀ(h + ẇa) dV − ∫∇w:G dV + ∮wᵀG·n dS.
Vec project_dynamics(const PdeProblem& problem, const BasisSet& basis, const BoundarySpec& bounds, double t);

// The same with the coefficients supplied explicitly.
Vec project_dynamics(const PdeProblem& problem, const BasisSet& basis, const BoundarySpec& bounds, const Vec& a,
                     double t);

// Appends `w` with coefficient 0.
BasisSet add_basis(const BasisSet& basis, const BasisFunction& w, double t = 0.0);

struct Removal {
  BasisSet basis;
  double disturbance = 0.0;  // L2 norm of w_i a_i
};
Removal remove_basis(const BasisSet& basis, int index, double t = 0.0);

Field reconstruct(const BasisSet& basis, double t = 0.0);

// L2 projection of a grid field onto the span.
Vec project_field(const BasisSet& basis, const Field& field, double t = 0.0);

// Families. Sine modes vanish on every face; along axis 0 in 1-D and as
// products in 2-D.
BasisFunction sine_mode(const Grid& grid, int n_state, int component, int kx, int ky = 0);
std::vector<BasisFunction> sine_modes(const Grid& grid, int n_state, int count);
BasisFunction gaussian_bump(int n_state, int component, const Vec& center, double width);

struct GalerkinTrajectory {
  std::vector<double> t;
  std::vector<Vec> a;
  std::vector<Vec> a_dot;

  void write_csv(const std::string& path) const;
};

GalerkinTrajectory galerkin_run(const PdeProblem& problem, const BasisSet& basis, const BoundarySpec& bounds,
                                double t0, double t1, double dt);

// (a₁−a₂)ᵀM(a₁−a₂) for two coefficient runs.
DecaySeries galerkin_perturbation(const PdeProblem& problem, const BasisSet& basis, const BoundarySpec& bounds,
                                  const Vec& a1, const Vec& a2, double t0, double t1, double dt);

}  // namespace contraction
