#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "contraction/error.hpp"
#include "contraction/grid.hpp"

namespace contraction {

// Pointwise callables. `phi` is the n-vector state, `grad` is n×m with row i
// holding ∇φ_i, `x` is the m-vector position.
using ReactionFn = std::function<Vec(const Vec& phi, const Mat& grad, const Vec& x, double t)>;
using ReactionJacobianFn = std::function<Mat(const Vec& phi, const Mat& grad, const Vec& x, double t)>;
// Flux tensor G: n×m, entry (i, j) = G_ij.
using FluxFn = std::function<Mat(const Mat& grad, const Vec& x, double t)>;
// ∂G_ij/∂∇_kφ_l laid out as an (n·m)×(n·m) matrix, row i·m+j, column l·m+k.
using FluxJacobianFn = std::function<Mat(const Mat& grad, const Vec& x, double t)>;

// ∂φ_i/∂t + h_i(Φ, ∇φ_i, x, t) + p_i = ∇·G_i(∇Φ, x, t)
struct PdeProblem {
  std::string name;
  int n_state = 1;
  int n_coord = 1;

  ReactionFn h;                  // empty means h ≡ 0
  ReactionJacobianFn dh_dPhi;    // n×n
  ReactionJacobianFn dh_dGrad;   // n×m, row i = ∂h_i/∂∇φ_i (the flow velocity)

  FluxFn g_flux;                 // empty means no diffusion
  FluxJacobianFn dG_dGrad;
  std::optional<Mat> lambda_bound;  // same layout as dG_dGrad

  // Set when G_i = g_i ∇φ_i; enables a fast flux path.
  std::optional<Vec> diffusivity;

  // Orthogonal projector onto the admissible state plane (linear constraints).
  std::optional<Mat> constraint_projector;

  [[nodiscard]] bool has_reaction() const { return static_cast<bool>(h); }
  [[nodiscard]] bool has_diffusion() const { return static_cast<bool>(g_flux); }

  // Installs G_i = g_i ∇φ_i with its exact Jacobian and Λ_ijij = g_i.
  void set_linear_diffusion(const Vec& g);

  [[nodiscard]] Vec eval_h(const Vec& phi, const Mat& grad, const Vec& x, double t) const;
  [[nodiscard]] Mat eval_dh_dPhi(const Vec& phi, const Mat& grad, const Vec& x, double t) const;
  [[nodiscard]] Mat eval_velocity(const Vec& phi, const Mat& grad, const Vec& x, double t) const;
  [[nodiscard]] Mat eval_flux(const Mat& grad, const Vec& x, double t) const;
  [[nodiscard]] Mat eval_flux_jacobian(const Mat& grad, const Vec& x, double t) const;
};

enum class BoundaryKind { Dirichlet, Neumann, InflowGiven };

// Dirichlet/InflowGiven: value of Φ; Neumann: outward normal derivative of Φ.
using BoundaryValueFn = std::function<Vec(const Vec& x, double t)>;

struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::Dirichlet;
  BoundaryValueFn value;
};

// Boundary data per face. A face with no entry carries no data: zero flux for
// diffusion and no values for inflow.
class BoundarySpec {
 public:
  BoundarySpec& set(Face face, BoundaryCondition condition);
  [[nodiscard]] const BoundaryCondition* at(Face face) const;
  [[nodiscard]] bool has_value(Face face) const;
  [[nodiscard]] bool is_dirichlet(Face face) const;

  static BoundarySpec uniform(const Grid& grid, BoundaryKind kind, BoundaryValueFn value);

 private:
  std::map<Face, BoundaryCondition> faces_;
};

// True when component `i` flows into the domain through `face` at this velocity.
bool is_inflowing(const Mat& velocity, int component, Face face);

struct ValidationIssue {
  ErrorCode code;
  std::string message;
};

struct ValidationReport {
  double jacobian_residual = 0.0;   // max relative mismatch of dh_dPhi vs finite differences
  double velocity_residual = 0.0;   // same for dh_dGrad
  double flux_residual = 0.0;       // same for dG_dGrad
  double projector_residual = 0.0;  // max of ‖P²−P‖, ‖P−Pᵀ‖
  int inflow_nodes = 0;
  std::vector<Face> uncovered_faces;
  std::vector<ValidationIssue> issues;

  [[nodiscard]] bool ok() const { return issues.empty(); }
};

// Checks derivative callables against central finite differences at every
// node of `probe` and verifies boundary coverage of inflowing faces.
ValidationReport check_problem(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds,
                               double t, const Field& probe);

// As check_problem, but throws the first issue as an Error.
ValidationReport validate_problem(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds,
                                  double t, const Field& probe);

// Relative tolerance of the derivative consistency check.
inline constexpr double kDerivativeTolerance = 1e-5;

}  // namespace contraction
