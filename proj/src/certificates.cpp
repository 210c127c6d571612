#include "contraction/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "contraction/io.hpp"
#include "contraction/operators.hpp"

namespace contraction {

std::string to_string(Classification c) {
  switch (c) {
    case Classification::Contracting: return "contracting";
    case Classification::SemiContracting: return "semi-contracting";
    case Classification::Indifferent: return "indifferent";
    case Classification::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

namespace {

void classify(Certificate& c, double max_abs_entry) {
  const double lam = c.lambda_V - c.diffusion_bound;
  const double tol = kCertificateTolerance;
  c.rate = 0.0;
  if (lam < -tol) {
    c.classification = Classification::Contracting;
    c.rate = -lam;
  } else if (max_abs_entry <= tol && c.diffusion_bound <= tol) {
    c.classification = Classification::Indifferent;
  } else if (lam <= tol) {
    c.classification = Classification::SemiContracting;
  } else {
    c.classification = Classification::Inconclusive;
  }
}

// Second-order derivative of a nodal scalar along `axis`.
double nodal_derivative(const Vec& f, const Grid& grid, int k, int axis) {
  const double h = grid.spacing(axis);
  const int lo = grid.neighbor(k, axis, -1);
  const int hi = grid.neighbor(k, axis, +1);
  if (lo >= 0 && hi >= 0) return (f(hi) - f(lo)) / (2.0 * h);
  if (lo < 0) return (-3.0 * f(k) + 4.0 * f(hi) - f(grid.neighbor(k, axis, 2))) / (2.0 * h);
  return (3.0 * f(k) - 4.0 * f(lo) + f(grid.neighbor(k, axis, -2))) / (2.0 * h);
}

struct Sweep {
  double lambda = -std::numeric_limits<double>::infinity();
  double max_abs = 0.0;
  std::size_t count = 0;
};

std::vector<int> all_components(int n, const std::vector<int>& components) {
  if (components.empty()) {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  for (int c : components)
    if (c < 0 || c >= n) throw Error(ErrorCode::BadParams, "certificate component out of range");
  return components;
}

Sweep sweep(const PdeProblem& problem, const Grid& grid, const std::vector<Field>& states,
            const std::vector<double>& t_samples, const std::vector<int>& components) {
  const auto idx = all_components(problem.n_state, components);
  if (states.empty()) throw Error(ErrorCode::EmptySampleSet, "no sample states supplied");
  const std::vector<double> times = t_samples.empty() ? std::vector<double>{0.0} : t_samples;
  Sweep s;
  for (const Field& state : states) {
    require_shape(state, grid, problem.n_state);
    for (double t : times) {
      for (const Mat& full : certificate_matrices(problem, grid, state, t)) {
        const Mat f = full(idx, idx);
        s.lambda = std::max(s.lambda, max_sym_eigenvalue(f));
        s.max_abs = std::max(s.max_abs, f.cwiseAbs().maxCoeff());
        ++s.count;
      }
    }
  }
  return s;
}

}  // namespace

std::vector<Mat> certificate_matrices(const PdeProblem& problem, const Grid& grid, const Field& state, double t) {
  const int n = problem.n_state;
  const int m = grid.dims();
  const auto grads = central_gradients(state, grid);
  std::vector<Mat> vel(grid.size());
  for (int k = 0; k < grid.size(); ++k)
    vel[k] = problem.eval_velocity(state.values.col(k), grads[k], grid.coords(k), t);

  std::vector<Mat> out(grid.size());
  Vec component(grid.size());
  std::vector<Vec> divergence(n, Vec::Zero(grid.size()));
  if (problem.dh_dGrad) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        for (int k = 0; k < grid.size(); ++k) component(k) = vel[k](i, j);
        for (int k = 0; k < grid.size(); ++k) divergence[i](k) += nodal_derivative(component, grid, k, j);
      }
  }
  for (int k = 0; k < grid.size(); ++k) {
    Mat f = -problem.eval_dh_dPhi(state.values.col(k), grads[k], grid.coords(k), t);
    for (int i = 0; i < n; ++i) f(i, i) += 0.5 * divergence[i](k);
    out[k] = symmetric_part(f);
  }
  return out;
}

Certificate first_order_rate(const PdeProblem& problem, const Grid& grid, const std::vector<Field>& states,
                             const std::vector<double>& t_samples, const std::vector<int>& components) {
  const Sweep s = sweep(problem, grid, states, t_samples, components);
  Certificate c;
  c.lambda_V = s.lambda;
  c.samples = s.count;
  classify(c, s.max_abs);
  return c;
}

double diffusion_rate_bound(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds,
                            const std::vector<int>& components) {
  if (!problem.lambda_bound) throw Error(ErrorCode::MissingLambdaBound, "problem has no Λ bound");
  const int n = problem.n_state;
  const int m = grid.dims();
  const Mat& lam = *problem.lambda_bound;
  if (lam.rows() != n * m || lam.cols() != n * m)
    throw Error(ErrorCode::ShapeMismatch, "Λ bound must be (n·m)×(n·m)");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  Vec factor = Vec::Zero(m);
  for (int j = 0; j < m; ++j) {
    const auto lo = static_cast<Face>(2 * j);
    const auto hi = static_cast<Face>(2 * j + 1);
    const int clamped = int(bounds.is_dirichlet(lo)) + int(bounds.is_dirichlet(hi));
    const double l = grid.length(j);
    if (clamped == 2) factor(j) = pi2 / (l * l);
    else if (clamped == 1) factor(j) = pi2 / (4.0 * l * l);
  }
  double bound = std::numeric_limits<double>::infinity();
  for (int i : all_components(n, components)) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) sum += lam(i * m + j, i * m + j) * factor(j);
    bound = std::min(bound, sum);
  }
  return std::max(bound, 0.0);
}

Certificate combined_certificate(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds,
                                 const std::vector<Field>& states, const std::vector<double>& t_samples,
                                 const std::vector<int>& components) {
  const Sweep s = sweep(problem, grid, states, t_samples, components);
  Certificate c;
  c.lambda_V = s.lambda;
  c.samples = s.count;
  if (problem.has_diffusion() || problem.lambda_bound)
    c.diffusion_bound = diffusion_rate_bound(problem, grid, bounds, components);
  classify(c, s.max_abs);
  return c;
}

std::string Certificate::report() const {
  std::ostringstream os;
  os << "lambda_V = " << fmt_num(lambda_V) << "\n"
     << "diffusion_bound = " << fmt_num(diffusion_bound) << "\n"
     << "rate = " << fmt_num(rate) << "\n"
     << "classification = " << to_string(classification) << "\n"
     << "sampled = " << (sampled ? "true" : "false") << "\n"
     << "samples = " << samples << "\n"
     << "rate_convention = norm (squared norm decays at 2*rate)\n";
  return os.str();
}

std::string Certificate::csv_header() { return "lambda_V,diffusion_bound,rate,classification"; }

std::string Certificate::csv_row() const {
  return fmt_num(lambda_V) + "," + fmt_num(diffusion_bound) + "," + fmt_num(rate) + "," + to_string(classification);
}

PdeProblem apply_metric(const PdeProblem& problem, const MetricTransform& transform) {
  const Mat& theta = transform.theta;
  const int n = problem.n_state;
  if (theta.rows() != n || theta.cols() != n) throw Error(ErrorCode::ShapeMismatch, "Θ must be n×n");
  Eigen::FullPivLU<Mat> lu(theta);
  const double scale = std::max(1.0, theta.cwiseAbs().maxCoeff());
  lu.setThreshold(1e-12);
  if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-12 * std::pow(scale, n))
    throw Error(ErrorCode::SingularTheta, "Θ is singular");
  const Mat inv = lu.inverse();

  PdeProblem out = problem;
  out.name = problem.name + "[metric]";
  if (problem.h) {
    auto h = problem.h;
    out.h = [h, theta, inv](const Vec& psi, const Mat& grad, const Vec& x, double t) -> Vec {
      return theta * h(inv * psi, inv * grad, x, t);
    };
  }
  if (problem.dh_dPhi) {
    auto d = problem.dh_dPhi;
    out.dh_dPhi = [d, theta, inv](const Vec& psi, const Mat& grad, const Vec& x, double t) -> Mat {
      return theta * d(inv * psi, inv * grad, x, t) * inv;
    };
  }
  if (problem.dh_dGrad) {
    auto v = problem.dh_dGrad;
    out.dh_dGrad = [v, inv](const Vec& psi, const Mat& grad, const Vec& x, double t) -> Mat {
      return v(inv * psi, inv * grad, x, t);
    };
  }
  const bool diagonal = theta.isDiagonal();
  const bool uniform = problem.diffusivity && (problem.diffusivity->array() == (*problem.diffusivity)(0)).all();
  if (problem.diffusivity && (diagonal || uniform)) {
    // Θ commutes with the diffusivity, so the operator is literally unchanged.
  } else if (problem.g_flux) {
    out.diffusivity.reset();
    auto g = problem.g_flux;
    out.g_flux = [g, theta, inv](const Mat& grad, const Vec& x, double t) -> Mat {
      return theta * g(inv * grad, x, t);
    };
    if (problem.dG_dGrad) {
      const int m = problem.n_coord;
      auto dg = problem.dG_dGrad;
      // Chain rule through q ↦ Θ⁻¹q on the row index and Θ on the output index.
      const Mat left = Eigen::kroneckerProduct(theta, Mat::Identity(m, m));
      const Mat right = Eigen::kroneckerProduct(inv, Mat::Identity(m, m));
      out.dG_dGrad = [dg, inv, left, right](const Mat& grad, const Vec& x, double t) -> Mat {
        return left * dg(inv * grad, x, t) * right;
      };
    }
  }
  if (problem.constraint_projector) out.constraint_projector = theta * (*problem.constraint_projector) * inv;
  return out;
}

}  // namespace contraction
