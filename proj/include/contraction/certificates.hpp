#pragma once

#include <string>
#include <vector>

#include "contraction/model.hpp"

namespace contraction {

enum class Classification { Contracting, SemiContracting, Indifferent, Inconclusive };

std::string to_string(Classification c);

// Rates are norm rates: ‖δΦ‖ decays like e^{−rate·t}, the squared norm like e^{−2·rate·t}.
struct Certificate {
  double lambda_V = 0.0;
  double diffusion_bound = 0.0;
  double rate = 0.0;
  Classification classification = Classification::Inconclusive;
  // λ_V is the maximum over caller-supplied samples, not a uniform bound.
  bool sampled = true;
  std::size_t samples = 0;

  [[nodiscard]] std::string report() const;
  [[nodiscard]] std::string csv_row() const;
  static std::string csv_header();
};

inline constexpr double kCertificateTolerance = 1e-10;

// Pointwise F = sym(−∂h/∂Φ + ½·diag(∇·v_i)) at every node of `state`.
// Velocity divergence is a second-order finite difference of the nodal
// velocity field.
std::vector<Mat> certificate_matrices(const PdeProblem& problem, const Grid& grid, const Field& state, double t);

// `components` restricts F to a principal block: the remaining components are
// treated as inputs of a hierarchy (empty means all).
Certificate first_order_rate(const PdeProblem& problem, const Grid& grid, const std::vector<Field>& states,
                             const std::vector<double>& t_samples, const std::vector<int>& components = {});

// Poincaré bound min_i Σ_j Λ_ijij·c_j with c_j = π²/l_j² when both faces on
// axis j are Dirichlet, π²/(4l_j²) when exactly one is, and 0 otherwise.
double diffusion_rate_bound(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds,
                            const std::vector<int>& components = {});

Certificate combined_certificate(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds,
                                 const std::vector<Field>& states, const std::vector<double>& t_samples,
                                 const std::vector<int>& components = {});

struct MetricTransform {
  Mat theta;
  [[nodiscard]] Mat metric() const { return theta.transpose() * theta; }
};

// Change of coordinates Ψ = ΘΦ. Reaction becomes Θh(Θ⁻¹Ψ, Θ⁻¹∇Ψ) with
// Jacobian Θ(∂h/∂Φ)Θ⁻¹; the velocity and the diffusion operator are carried
// over unchanged.
PdeProblem apply_metric(const PdeProblem& problem, const MetricTransform& transform);

}  // namespace contraction
