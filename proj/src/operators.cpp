#include "contraction/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace contraction {

std::vector<Mat> central_gradients(const Field& field, const Grid& grid) {
  const int n = field.n_state();
  const int m = grid.dims();
  std::vector<Mat> grads(grid.size(), Mat::Zero(n, m));
  for (int k = 0; k < grid.size(); ++k) {
    for (int a = 0; a < m; ++a) {
      const double h = grid.spacing(a);
      const int lo = grid.neighbor(k, a, -1);
      const int hi = grid.neighbor(k, a, +1);
      if (lo >= 0 && hi >= 0) {
        grads[k].col(a) = (field.values.col(hi) - field.values.col(lo)) / (2.0 * h);
      } else if (lo < 0) {
        const int hi2 = grid.neighbor(k, a, +2);
        grads[k].col(a) =
            (-3.0 * field.values.col(k) + 4.0 * field.values.col(hi) - field.values.col(hi2)) / (2.0 * h);
      } else {
        const int lo2 = grid.neighbor(k, a, -2);
        grads[k].col(a) =
            (3.0 * field.values.col(k) - 4.0 * field.values.col(lo) + field.values.col(lo2)) / (2.0 * h);
      }
    }
  }
  return grads;
}

namespace {

// Upwind difference of row `comp` at `node` along `axis` for velocity `v`.
double upwind_difference(const Mat& values, const Grid& grid, int comp, int node, int axis, double v) {
  const double h = grid.spacing(axis);
  const int lo = grid.neighbor(node, axis, -1);
  const int hi = grid.neighbor(node, axis, +1);
  const bool backward = v > 0.0 ? lo >= 0 : hi < 0;
  if (backward) return (values(comp, node) - values(comp, lo)) / h;
  return (values(comp, hi) - values(comp, node)) / h;
}

}  // namespace

Field upwind_gradient(const Field& field, const Grid& grid, const Field& velocity, int axis) {
  if (axis < 0 || axis >= grid.dims()) throw Error(ErrorCode::ShapeMismatch, "axis out of range");
  if (field.n_nodes() != grid.size()) throw Error(ErrorCode::ShapeMismatch, "field does not match grid");
  if (velocity.n_nodes() != grid.size() || velocity.n_state() != grid.dims())
    throw Error(ErrorCode::ShapeMismatch, "velocity must be dims x nodes");
  Field out(field.n_state(), grid.size());
  for (int k = 0; k < grid.size(); ++k)
    for (int i = 0; i < field.n_state(); ++i)
      out(i, k) = upwind_difference(field.values, grid, i, k, axis, velocity(axis, k));
  return out;
}

// ---------------------------------------------------------------------------
// Discretization

Discretization::Discretization(PdeProblem problem, Grid grid, BoundarySpec bounds)
    : problem_(std::move(problem)), grid_(std::move(grid)), bounds_(std::move(bounds)) {
  if (problem_.n_coord != grid_.dims())
    throw Error(ErrorCode::ShapeMismatch, "problem n_coord does not match grid dimension");
  dirichlet_.assign(grid_.size(), 0);
  for (Face f : grid_.faces()) {
    if (!bounds_.is_dirichlet(f)) continue;
    if (!bounds_.at(f)->value)
      throw Error(ErrorCode::MissingBoundaryData, "Dirichlet face " + std::string(face_name(f)) + " has no value");
    for (int k = 0; k < grid_.size(); ++k)
      if (grid_.on_face(k, f)) dirichlet_[k] = 1;
  }
  if (problem_.has_diffusion()) build_faces();
}

bool Discretization::dirichlet_node(int node) const { return dirichlet_[node] != 0; }

void Discretization::build_faces() {
  const int m = grid_.dims();
  // Tangential derivative at `node` along axis `t`, scaled by `w`.
  auto tangential = [&](std::vector<Tap>& taps, int node, int t, double w) {
    const double h = grid_.spacing(t);
    const int lo = grid_.neighbor(node, t, -1);
    const int hi = grid_.neighbor(node, t, +1);
    if (lo >= 0 && hi >= 0) {
      taps.push_back({hi, t, w / (2.0 * h)});
      taps.push_back({lo, t, -w / (2.0 * h)});
    } else if (lo < 0) {
      taps.push_back({hi, t, w / h});
      taps.push_back({node, t, -w / h});
    } else {
      taps.push_back({node, t, w / h});
      taps.push_back({lo, t, -w / h});
    }
  };

  for (int axis = 0; axis < m; ++axis) {
    const double h = grid_.spacing(axis);
    for (int a = 0; a < grid_.size(); ++a) {
      const int b = grid_.neighbor(a, axis, +1);
      if (b < 0) continue;
      FluxFace face;
      face.axis = axis;
      face.lower = a;
      face.upper = b;
      face.x = 0.5 * (grid_.coords(a) + grid_.coords(b));
      face.taps.push_back({b, axis, 1.0 / h});
      face.taps.push_back({a, axis, -1.0 / h});
      for (int t = 0; t < m; ++t) {
        if (t == axis) continue;
        tangential(face.taps, a, t, 0.5);
        tangential(face.taps, b, t, 0.5);
      }
      faces_.push_back(std::move(face));
    }
  }
  for (Face f : grid_.faces()) {
    const auto* cond = bounds_.at(f);
    if (!cond || cond->kind != BoundaryKind::Neumann) continue;
    const int axis = face_axis(f);
    for (int k = 0; k < grid_.size(); ++k) {
      if (!grid_.on_face(k, f) || dirichlet_node(k)) continue;
      FluxFace face;
      face.axis = axis;
      face.normal_sign = face_normal_sign(f);
      if (face.normal_sign < 0) face.upper = k;
      else face.lower = k;
      face.x = grid_.coords(k);
      face.neumann = true;
      face.neumann_value = cond->value;
      for (int t = 0; t < m; ++t)
        if (t != axis) tangential(face.taps, k, t, 1.0);
      faces_.push_back(std::move(face));
    }
  }
}

Mat Discretization::face_gradient(const FluxFace& face, const Field& state, double t) const {
  Mat q = Mat::Zero(problem_.n_state, grid_.dims());
  for (const Tap& tap : face.taps) q.col(tap.axis) += tap.coef * state.values.col(tap.node);
  if (face.neumann) {
    if (face.neumann_value) q.col(face.axis) = face.normal_sign * face.neumann_value(face.x, t);
    else q.col(face.axis).setZero();
  }
  return q;
}

std::vector<Mat> Discretization::velocities(const Field& state, double t) const {
  if (!problem_.dh_dGrad) return std::vector<Mat>(grid_.size(), Mat::Zero(problem_.n_state, grid_.dims()));
  const auto grads = central_gradients(state, grid_);
  std::vector<Mat> v(grid_.size());
  for (int k = 0; k < grid_.size(); ++k)
    v[k] = problem_.dh_dGrad(state.values.col(k), grads[k], grid_.coords(k), t);
  return v;
}

Eigen::MatrixXi Discretization::given_mask(const std::vector<Mat>& velocity) const {
  const int n = problem_.n_state;
  Eigen::MatrixXi mask = Eigen::MatrixXi::Zero(n, grid_.size());
  for (int k = 0; k < grid_.size(); ++k) {
    if (dirichlet_node(k)) {
      mask.col(k).setOnes();
      continue;
    }
    for (Face f : grid_.faces()) {
      if (!grid_.on_face(k, f)) continue;
      for (int i = 0; i < n; ++i) {
        if (!is_inflowing(velocity[k], i, f)) continue;
        if (!bounds_.has_value(f))
          throw Error(ErrorCode::MissingBoundaryData,
                      "inflowing face " + std::string(face_name(f)) + " has no value function");
        mask(i, k) = 1;
      }
    }
  }
  return mask;
}

void Discretization::impose(Field& state, double t) const {
  const auto vel = velocities(state, t);
  const auto mask = given_mask(vel);
  for (int k = 0; k < grid_.size(); ++k) {
    if (!mask.col(k).any()) continue;
    const Vec x = grid_.coords(k);
    const BoundaryCondition* dirichlet = nullptr;
    for (Face f : grid_.faces())
      if (grid_.on_face(k, f) && bounds_.is_dirichlet(f)) {
        dirichlet = bounds_.at(f);
        break;
      }
    if (dirichlet) {
      state.values.col(k) = dirichlet->value(x, t);
      continue;
    }
    for (Face f : grid_.faces()) {
      if (!grid_.on_face(k, f) || !bounds_.has_value(f)) continue;
      const Vec value = bounds_.at(f)->value(x, t);
      for (int i = 0; i < problem_.n_state; ++i)
        if (mask(i, k) && is_inflowing(vel[k], i, f)) state(i, k) = value(i);
    }
  }
}

Field Discretization::diffusion(const Field& state, double t) const {
  const int n = problem_.n_state;
  Field out(n, grid_.size());
  if (!problem_.has_diffusion()) return out;
  const bool linear = problem_.diffusivity.has_value();
  Vec flux(n);
  for (const FluxFace& face : faces_) {
    if (linear) {
      Vec q = Vec::Zero(n);
      if (face.neumann) {
        if (face.neumann_value) q = face.normal_sign * face.neumann_value(face.x, t);
      } else {
        for (const Tap& tap : face.taps)
          if (tap.axis == face.axis) q += tap.coef * state.values.col(tap.node);
      }
      flux = problem_.diffusivity->cwiseProduct(q);
    } else {
      flux = problem_.g_flux(face_gradient(face, state, t), face.x, t).col(face.axis);
    }
    if (face.lower >= 0) out.values.col(face.lower) += flux / grid_.cell_width(face.lower, face.axis);
    if (face.upper >= 0) out.values.col(face.upper) -= flux / grid_.cell_width(face.upper, face.axis);
  }
  for (int k = 0; k < grid_.size(); ++k)
    if (dirichlet_node(k)) out.values.col(k).setZero();
  return out;
}

Field Discretization::rhs(const Field& state, double t) const {
  require_shape(state, grid_, problem_.n_state);
  const int n = problem_.n_state;
  const int m = grid_.dims();
  Field out(n, grid_.size());
  Eigen::MatrixXi mask = Eigen::MatrixXi::Zero(n, grid_.size());
  if (problem_.has_reaction()) {
    const auto vel = velocities(state, t);
    mask = given_mask(vel);
    Mat grad(n, m);
    for (int k = 0; k < grid_.size(); ++k) {
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < m; ++a) grad(i, a) = upwind_difference(state.values, grid_, i, k, a, vel[k](i, a));
      out.values.col(k) = -problem_.h(state.values.col(k), grad, grid_.coords(k), t);
    }
  } else {
    for (int k = 0; k < grid_.size(); ++k)
      if (dirichlet_node(k)) mask.col(k).setOnes();
  }
  if (problem_.has_diffusion()) out.values += diffusion(state, t).values;
  if (problem_.constraint_projector) out.values = (*problem_.constraint_projector) * out.values;
  for (int k = 0; k < grid_.size(); ++k)
    for (int i = 0; i < n; ++i)
      if (mask(i, k)) out(i, k) = 0.0;
  return out;
}

double Discretization::max_diffusivity(const Field& state, double t) const {
  if (!problem_.has_diffusion()) return 0.0;
  if (problem_.diffusivity) return problem_.diffusivity->cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (const FluxFace& face : faces_) {
    const Mat jac = problem_.eval_flux_jacobian(face_gradient(face, state, t), face.x, t);
    worst = std::max(worst, jac.cwiseAbs().rowwise().sum().maxCoeff());
  }
  return worst;
}

double Discretization::stable_dt(const Field& state, double t) const {
  const double h = grid_.min_spacing();
  double limit = std::numeric_limits<double>::infinity();
  if (problem_.dh_dGrad) {
    double vmax = 0.0;
    for (const Mat& v : velocities(state, t)) vmax = std::max(vmax, v.cwiseAbs().maxCoeff());
    if (vmax > 0.0) limit = std::min(limit, h / vmax);
  }
  const double lam = max_diffusivity(state, t);
  if (lam > 0.0) limit = std::min(limit, h * h / (2.0 * grid_.dims() * lam));
  return 0.4 * limit;
}

DiffusionMatrix Discretization::diffusion_jacobian(const Field& state, double t) const {
  const int n = problem_.n_state;
  const int m = grid_.dims();
  DiffusionMatrix result;
  std::vector<int> slot(static_cast<std::size_t>(grid_.size()) * n, -1);
  for (int k = 0; k < grid_.size(); ++k) {
    if (dirichlet_node(k)) continue;
    for (int i = 0; i < n; ++i) {
      slot[k * n + i] = static_cast<int>(result.free_index.size());
      result.free_index.push_back(k * n + i);
    }
  }
  const auto size = static_cast<Eigen::Index>(result.free_index.size());
  result.matrix.resize(size, size);
  if (!problem_.has_diffusion()) return result;

  std::vector<Eigen::Triplet<double>> triplets;
  for (const FluxFace& face : faces_) {
    const Mat jac = problem_.eval_flux_jacobian(face_gradient(face, state, t), face.x, t);
    for (const Tap& tap : face.taps) {
      for (int l = 0; l < n; ++l) {
        const int col = slot[tap.node * n + l];
        if (col < 0) continue;
        for (int i = 0; i < n; ++i) {
          const double d = jac(i * m + face.axis, l * m + tap.axis) * tap.coef;
          if (d == 0.0) continue;
          if (face.lower >= 0 && slot[face.lower * n + i] >= 0)
            triplets.emplace_back(slot[face.lower * n + i], col, d / grid_.cell_width(face.lower, face.axis));
          if (face.upper >= 0 && slot[face.upper * n + i] >= 0)
            triplets.emplace_back(slot[face.upper * n + i], col, -d / grid_.cell_width(face.upper, face.axis));
        }
      }
    }
  }
  result.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return result;
}

// ---------------------------------------------------------------------------
// Free-standing operator assembly

ConvectionMatrices assemble_convection_matrix(const PdeProblem& problem, const Grid& grid,
                                              const BoundarySpec& bounds, double t, const Field& state) {
  const int n = problem.n_state;
  const Field probe = state.n_nodes() == 0 ? Field(n, grid.size()) : state;
  require_shape(probe, grid, n);
  Discretization disc(problem, grid, bounds);
  const auto vel = disc.velocities(probe, t);
  const auto mask = disc.given_mask(vel);

  ConvectionMatrices out;
  for (int i = 0; i < n; ++i) {
    std::vector<int> slot(grid.size(), -1);
    std::vector<int> free;
    for (int k = 0; k < grid.size(); ++k)
      if (!mask(i, k)) {
        slot[k] = static_cast<int>(free.size());
        free.push_back(k);
      }
    std::vector<Eigen::Triplet<double>> full_t, red_t;
    auto put = [&](int row, int col, double value) {
      full_t.emplace_back(row, col, value);
      if (slot[row] >= 0 && slot[col] >= 0) red_t.emplace_back(slot[row], slot[col], value);
    };
    for (int k = 0; k < grid.size(); ++k) {
      if (mask(i, k)) continue;  // prescribed rows are removed
      for (int a = 0; a < grid.dims(); ++a) {
        const double v = vel[k](i, a);
        if (v == 0.0) continue;
        const double h = grid.spacing(a);
        const int lo = grid.neighbor(k, a, -1);
        const int hi = grid.neighbor(k, a, +1);
        const bool backward = v > 0.0 ? lo >= 0 : hi < 0;
        if (backward) {
          put(k, lo, -v / h);
          put(k, k, v / h);
        } else {
          put(k, k, -v / h);
          put(k, hi, v / h);
        }
      }
    }
    SparseMat full(grid.size(), grid.size());
    full.setFromTriplets(full_t.begin(), full_t.end());
    SparseMat reduced(static_cast<Eigen::Index>(free.size()), static_cast<Eigen::Index>(free.size()));
    reduced.setFromTriplets(red_t.begin(), red_t.end());
    out.full.push_back(std::move(full));
    out.reduced.push_back(std::move(reduced));
    out.free_nodes.push_back(std::move(free));
  }
  return out;
}

PsdCheck upwind_psd_check(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds, double t,
                          const Field& state) {
  const auto conv = assemble_convection_matrix(problem, grid, bounds, t, state);
  PsdCheck result;
  result.min_eig = std::numeric_limits<double>::infinity();
  for (const SparseMat& c : conv.reduced) {
    if (c.rows() == 0) continue;
    // Upwind divergence: column sums of the reduced matrix.
    const Vec divergence = Vec::Ones(c.rows()).transpose() * c;
    SparseMat m = 0.5 * (c + SparseMat(c.transpose()));
    for (Eigen::Index k = 0; k < c.rows(); ++k) m.coeffRef(k, k) -= 0.5 * divergence(k);
    m.makeCompressed();
    result.min_eig = std::min(result.min_eig, min_eigenvalue(m));
  }
  if (!std::isfinite(result.min_eig)) result.min_eig = 0.0;
  result.is_psd = result.min_eig >= -kPsdTolerance;
  return result;
}

DiffusionMatrix diffusion_matrix(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds,
                                 double t, const Field& state) {
  const Field probe = state.n_nodes() == 0 ? Field(problem.n_state, grid.size()) : state;
  require_shape(probe, grid, problem.n_state);
  return Discretization(problem, grid, bounds).diffusion_jacobian(probe, t);
}

}  // namespace contraction
