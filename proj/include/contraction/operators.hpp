#pragma once

#include <vector>

#include "contraction/model.hpp"

namespace contraction {

// One-sided difference along `axis`, taken against the local velocity: a
// backward difference where the velocity component is positive, forward where
// it is negative or zero. Edge nodes whose stencil would leave the grid fall
// back to the inward one-sided difference. `velocity` is m×nodes.
Field upwind_gradient(const Field& field, const Grid& grid, const Field& velocity, int axis);

// Second-order central differences (second-order one-sided on edges).
// Returns one n×m gradient matrix per node.
std::vector<Mat> central_gradients(const Field& field, const Grid& grid);

struct ConvectionMatrices {
  // C_i restricted to the free (evolved) nodes of component i.
  std::vector<SparseMat> reduced;
  // C_i over all nodes, before row/column deletion.
  std::vector<SparseMat> full;
  std::vector<std::vector<int>> free_nodes;
};

// Upwind matrix of Σ_j v_ij ∇_j for every component; rows and columns of nodes
// whose value is prescribed (Dirichlet, or inflowing with given data) are
// deleted. Velocities come from dh_dGrad at `state` (zeros when empty).
ConvectionMatrices assemble_convection_matrix(const PdeProblem& problem, const Grid& grid,
                                              const BoundarySpec& bounds, double t,
                                              const Field& state = Field());

struct PsdCheck {
  bool is_psd = true;
  double min_eig = 0.0;
};

// Minimum eigenvalue of sym(C_i) − ½·diag(D_i) over all components, where
// D_i is the upwind divergence of the velocity (column sums of the full C_i),
// restricted to free nodes. PSD ⇔ min_eig ≥ −1e-10.
PsdCheck upwind_psd_check(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds, double t,
                          const Field& state = Field());

inline constexpr double kPsdTolerance = 1e-10;

struct DiffusionMatrix {
  // Linearization of the discrete ∇·G about `state`, on free unknowns.
  SparseMat matrix;
  // Unknown r corresponds to (node, component) = (free_index[r] / n, free_index[r] % n).
  std::vector<int> free_index;
};

DiffusionMatrix diffusion_matrix(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds,
                                 double t, const Field& state = Field());

// The method-of-lines semi-discretization used by `dynamics`:
// ∂Φ/∂t = P(−h(Φ, ∇̃Φ) + ∇·G(∇Φ)) with upwind ∇̃ and a flux-form divergence.
class Discretization {
 public:
  Discretization(PdeProblem problem, Grid grid, BoundarySpec bounds);

  [[nodiscard]] const PdeProblem& problem() const { return problem_; }
  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] const BoundarySpec& bounds() const { return bounds_; }

  // Per-node n×m velocity at `state`.
  [[nodiscard]] std::vector<Mat> velocities(const Field& state, double t) const;

  // given(i, k) = 1 when component i at node k is prescribed by boundary data.
  // Throws MissingBoundaryData for inflowing nodes without a value.
  [[nodiscard]] Eigen::MatrixXi given_mask(const std::vector<Mat>& velocity) const;

  // Overwrites prescribed nodes with boundary values at time t.
  void impose(Field& state, double t) const;

  // Time derivative of all nodes; zero on prescribed nodes.
  [[nodiscard]] Field rhs(const Field& state, double t) const;

  // Discrete ∇·G alone (zero on Dirichlet nodes).
  [[nodiscard]] Field diffusion(const Field& state, double t) const;

  // Explicit RK4 stability limit 0.4·min(Δx/|v|max, Δx²/(2·m·Λmax)).
  [[nodiscard]] double stable_dt(const Field& state, double t) const;

  [[nodiscard]] DiffusionMatrix diffusion_jacobian(const Field& state, double t) const;

 private:
  struct Tap {
    int node;
    int axis;
    double coef;
  };
  struct FluxFace {
    int axis = 0;
    int lower = -1;  // node on the low side, -1 for a boundary face on the low edge
    int upper = -1;  // node on the high side, -1 for a boundary face on the high edge
    Vec x;
    std::vector<Tap> taps;
    bool neumann = false;
    BoundaryValueFn neumann_value;  // empty means zero normal derivative
    double normal_sign = 0.0;
  };

  void build_faces();
  [[nodiscard]] Mat face_gradient(const FluxFace& face, const Field& state, double t) const;
  [[nodiscard]] bool dirichlet_node(int node) const;
  [[nodiscard]] double max_diffusivity(const Field& state, double t) const;

  PdeProblem problem_;
  Grid grid_;
  BoundarySpec bounds_;
  std::vector<FluxFace> faces_;
  std::vector<char> dirichlet_;
};

}  // namespace contraction
