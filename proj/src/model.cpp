#include "contraction/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "contraction/operators.hpp"

namespace contraction {

void PdeProblem::set_linear_diffusion(const Vec& g) {
  if (g.size() != n_state) throw Error(ErrorCode::ShapeMismatch, "diffusivity must have n_state entries");
  diffusivity = g;
  const int n = n_state;
  const int m = n_coord;
  g_flux = [g](const Mat& grad, const Vec&, double) -> Mat { return g.asDiagonal() * grad; };
  dG_dGrad = [g, n, m](const Mat&, const Vec&, double) -> Mat {
    Mat jac = Mat::Zero(n * m, n * m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) jac(i * m + j, i * m + j) = g(i);
    return jac;
  };
  Mat lambda = Mat::Zero(n * m, n * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) lambda(i * m + j, i * m + j) = std::max(0.0, g(i));
  lambda_bound = lambda;
}

Vec PdeProblem::eval_h(const Vec& phi, const Mat& grad, const Vec& x, double t) const {
  if (!h) return Vec::Zero(n_state);
  return h(phi, grad, x, t);
}

Mat PdeProblem::eval_dh_dPhi(const Vec& phi, const Mat& grad, const Vec& x, double t) const {
  if (!dh_dPhi) return Mat::Zero(n_state, n_state);
  return dh_dPhi(phi, grad, x, t);
}

Mat PdeProblem::eval_velocity(const Vec& phi, const Mat& grad, const Vec& x, double t) const {
  if (!dh_dGrad) return Mat::Zero(n_state, n_coord);
  return dh_dGrad(phi, grad, x, t);
}

Mat PdeProblem::eval_flux(const Mat& grad, const Vec& x, double t) const {
  if (!g_flux) return Mat::Zero(n_state, n_coord);
  return g_flux(grad, x, t);
}

Mat PdeProblem::eval_flux_jacobian(const Mat& grad, const Vec& x, double t) const {
  const int nm = n_state * n_coord;
  if (dG_dGrad) return dG_dGrad(grad, x, t);
  if (!g_flux) return Mat::Zero(nm, nm);
  // Central differences on the flux when no Jacobian callable is supplied.
  Mat jac(nm, nm);
  for (int l = 0; l < n_state; ++l)
    for (int k = 0; k < n_coord; ++k) {
      const double step = 1e-6 * std::max(1.0, std::abs(grad(l, k)));
      Mat plus = grad, minus = grad;
      plus(l, k) += step;
      minus(l, k) -= step;
      const Mat d = (g_flux(plus, x, t) - g_flux(minus, x, t)) / (2.0 * step);
      for (int i = 0; i < n_state; ++i)
        for (int j = 0; j < n_coord; ++j) jac(i * n_coord + j, l * n_coord + k) = d(i, j);
    }
  return jac;
}

BoundarySpec& BoundarySpec::set(Face face, BoundaryCondition condition) {
  faces_[face] = std::move(condition);
  return *this;
}

const BoundaryCondition* BoundarySpec::at(Face face) const {
  auto it = faces_.find(face);
  return it == faces_.end() ? nullptr : &it->second;
}

bool BoundarySpec::has_value(Face face) const {
  const auto* c = at(face);
  return c && c->value && (c->kind == BoundaryKind::Dirichlet || c->kind == BoundaryKind::InflowGiven);
}

bool BoundarySpec::is_dirichlet(Face face) const {
  const auto* c = at(face);
  return c && c->kind == BoundaryKind::Dirichlet;
}

BoundarySpec BoundarySpec::uniform(const Grid& grid, BoundaryKind kind, BoundaryValueFn value) {
  BoundarySpec spec;
  for (Face f : grid.faces()) spec.set(f, {kind, value});
  return spec;
}

bool is_inflowing(const Mat& velocity, int component, Face face) {
  const int axis = face_axis(face);
  if (axis >= velocity.cols()) return false;
  return velocity(component, axis) * face_normal_sign(face) < 0.0;
}

namespace {

double fd_step(double value) { return 1e-6 * std::max(1.0, std::abs(value)); }

// Largest |analytic − fd| and whether any entry exceeded the relative tolerance.
struct Mismatch {
  double residual = 0.0;
  bool exceeded = false;
  void add(double analytic, double numeric) {
    const double diff = std::abs(analytic - numeric);
    residual = std::max(residual, diff);
    if (diff > kDerivativeTolerance * std::max(1.0, std::abs(numeric))) exceeded = true;
  }
};

}  // namespace

ValidationReport check_problem(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds,
                               double t, const Field& probe) {
  require_shape(probe, grid, problem.n_state);
  if (problem.n_coord != grid.dims())
    throw Error(ErrorCode::ShapeMismatch, "problem n_coord does not match grid dimension");
  ValidationReport report;
  const int n = problem.n_state;
  const int m = problem.n_coord;
  const auto grads = central_gradients(probe, grid);

  Mismatch jac, vel, flux;
  for (int k = 0; k < grid.size(); ++k) {
    const Vec x = grid.coords(k);
    const Vec phi = probe.values.col(k);
    const Mat& grad = grads[k];
    if (problem.has_reaction()) {
      const Mat a = problem.eval_dh_dPhi(phi, grad, x, t);
      for (int l = 0; l < n; ++l) {
        const double s = fd_step(phi(l));
        Vec plus = phi, minus = phi;
        plus(l) += s;
        minus(l) -= s;
        const Vec d = (problem.h(plus, grad, x, t) - problem.h(minus, grad, x, t)) / (2.0 * s);
        for (int i = 0; i < n; ++i) jac.add(a(i, l), d(i));
      }
      const Mat v = problem.eval_velocity(phi, grad, x, t);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
          const double s = fd_step(grad(i, j));
          Mat plus = grad, minus = grad;
          plus(i, j) += s;
          minus(i, j) -= s;
          const double d = (problem.h(phi, plus, x, t)(i) - problem.h(phi, minus, x, t)(i)) / (2.0 * s);
          vel.add(v(i, j), d);
        }
    }
    if (problem.has_diffusion() && problem.dG_dGrad) {
      const Mat a = problem.dG_dGrad(grad, x, t);
      for (int l = 0; l < n; ++l)
        for (int kk = 0; kk < m; ++kk) {
          const double s = fd_step(grad(l, kk));
          Mat plus = grad, minus = grad;
          plus(l, kk) += s;
          minus(l, kk) -= s;
          const Mat d = (problem.g_flux(plus, x, t) - problem.g_flux(minus, x, t)) / (2.0 * s);
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) flux.add(a(i * m + j, l * m + kk), d(i, j));
        }
    }

    // Boundary coverage.
    if (problem.has_reaction()) {
      const Mat v = problem.eval_velocity(phi, grad, x, t);
      for (Face f : grid.faces()) {
        if (!grid.on_face(k, f)) continue;
        for (int i = 0; i < n; ++i) {
          if (!is_inflowing(v, i, f)) continue;
          ++report.inflow_nodes;
          if (!bounds.has_value(f) &&
              std::find(report.uncovered_faces.begin(), report.uncovered_faces.end(), f) ==
                  report.uncovered_faces.end())
            report.uncovered_faces.push_back(f);
        }
      }
    }
  }
  report.jacobian_residual = jac.residual;
  report.velocity_residual = vel.residual;
  report.flux_residual = flux.residual;

  for (Face f : report.uncovered_faces)
    report.issues.push_back({ErrorCode::MissingBoundaryData,
                             "inflowing face " + std::string(face_name(f)) + " has no value function"});
  auto mismatch = [&](const char* what, double r) {
    std::ostringstream msg;
    msg << what << " disagrees with finite differences (residual " << r << ")";
    report.issues.push_back({ErrorCode::DerivativeMismatch, msg.str()});
  };
  if (jac.exceeded) mismatch("dh_dPhi", jac.residual);
  if (vel.exceeded) mismatch("dh_dGrad", vel.residual);
  if (flux.exceeded) mismatch("dG_dGrad", flux.residual);

  if (problem.constraint_projector) {
    const Mat& p = *problem.constraint_projector;
    if (p.rows() != n || p.cols() != n)
      throw Error(ErrorCode::ShapeMismatch, "constraint projector must be n_state x n_state");
    report.projector_residual =
        std::max((p * p - p).cwiseAbs().maxCoeff(), (p - p.transpose()).cwiseAbs().maxCoeff());
    if (report.projector_residual > 1e-10)
      report.issues.push_back({ErrorCode::NonlinearConstraint,
                               "constraint projector is not an orthogonal projector"});
  }
  if (problem.lambda_bound) {
    const Mat& lam = *problem.lambda_bound;
    const int nm = n * m;
    if (lam.rows() != nm || lam.cols() != nm)
      throw Error(ErrorCode::ShapeMismatch, "lambda_bound must be (n*m)x(n*m)");
    bool bad = lam.minCoeff() < 0.0;
    for (int r = 0; r < nm; ++r)
      for (int c = 0; c < nm; ++c)
        if (r != c && lam(r, c) != 0.0) bad = true;
    if (bad) report.issues.push_back({ErrorCode::BadParams, "lambda_bound must be nonnegative and diagonal"});
  }
  return report;
}

ValidationReport validate_problem(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds,
                                  double t, const Field& probe) {
  auto report = check_problem(problem, grid, bounds, t, probe);
  if (!report.ok()) throw Error(report.issues.front().code, report.issues.front().message);
  return report;
}

}  // namespace contraction
