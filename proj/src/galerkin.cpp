#include "contraction/galerkin.hpp"

#include <cmath>
#include <numbers>

#include "contraction/io.hpp"

namespace contraction {

BasisSet::BasisSet(Grid grid, int n_state, std::vector<BasisFunction> functions, Vec coefficients)
    : grid_(std::move(grid)), n_state_(n_state), functions_(std::move(functions)), a_(std::move(coefficients)) {
  if (n_state_ < 1) throw Error(ErrorCode::ShapeMismatch, "basis needs at least one state component");
  if (a_.size() == 0) a_ = Vec::Zero(size());
  if (a_.size() != size()) throw Error(ErrorCode::ShapeMismatch, "one coefficient per basis function required");
  for (const auto& f : functions_)
    if (!f.value || !f.grad) throw Error(ErrorCode::BadParams, "basis function " + f.label + " is incomplete");
  if (!is_static()) return;
  for (int k = 0; k < size(); ++k) {
    value_cache_.push_back(values(k, 0.0));
    std::vector<Mat> g;
    for (int a = 0; a < grid_.dims(); ++a) g.push_back(gradients(k, a, 0.0));
    grad_cache_.push_back(std::move(g));
  }
}

void BasisSet::set_coefficients(const Vec& a) {
  if (a.size() != size()) throw Error(ErrorCode::ShapeMismatch, "one coefficient per basis function required");
  a_ = a;
}

bool BasisSet::is_static() const {
  for (const auto& f : functions_)
    if (f.dt) return false;
  return true;
}

Mat BasisSet::values(int k, double t) const {
  if (static_cast<std::size_t>(k) < value_cache_.size()) return value_cache_[k];
  Mat out(n_state_, grid_.size());
  for (int node = 0; node < grid_.size(); ++node) out.col(node) = functions_[k].value(grid_.coords(node), t);
  return out;
}

Mat BasisSet::gradients(int k, int axis, double t) const {
  if (static_cast<std::size_t>(k) < grad_cache_.size()) return grad_cache_[k][axis];
  Mat out(n_state_, grid_.size());
  for (int node = 0; node < grid_.size(); ++node) out.col(node) = functions_[k].grad(grid_.coords(node), t).col(axis);
  return out;
}

Mat BasisSet::time_derivative(int k, double t) const {
  Mat out = Mat::Zero(n_state_, grid_.size());
  if (!functions_[k].dt) return out;
  for (int node = 0; node < grid_.size(); ++node) out.col(node) = functions_[k].dt(grid_.coords(node), t);
  return out;
}

namespace {

// Σ_nodes q_k · (A.col(k) · B.col(k)).
double weighted_dot(const Mat& a, const Mat& b, const Vec& q) {
  return ((a.array() * b.array()).colwise().sum().transpose() * q.array()).sum();
}

Mat combine(const BasisSet& basis, const Vec& a, double t, int axis) {
  Mat out = Mat::Zero(basis.n_state(), basis.grid().size());
  for (int k = 0; k < basis.size(); ++k)
    if (a(k) != 0.0) out += a(k) * (axis < 0 ? basis.values(k, t) : basis.gradients(k, axis, t));
  return out;
}

// Trapezoidal weight of `node` within the face orthogonal to `axis`.
double face_weight(const Grid& grid, int node, int axis) {
  double w = 1.0;
  for (int a = 0; a < grid.dims(); ++a)
    if (a != axis) w *= grid.cell_width(node, a);
  return w;
}

}  // namespace

Mat mass_matrix(const BasisSet& basis, double t) {
  const int K = basis.size();
  const Vec q = basis.grid().quadrature_weights();
  std::vector<Mat> w;
  for (int k = 0; k < K; ++k) w.push_back(basis.values(k, t));
  Mat M(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = i; j < K; ++j) M(i, j) = M(j, i) = weighted_dot(w[i], w[j], q);
  if (K == 0) return M;
  const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(M, Eigen::EigenvaluesOnly).eigenvalues();
  if (!(ev(0) > 0.0) || ev(K - 1) / ev(0) > 1e12)
    throw Error(ErrorCode::DegenerateBasis, "mass matrix is singular or condition number exceeds 1e12");
  return M;
}

void check_basis_boundary(const BasisSet& basis, const BoundarySpec& bounds, double t) {
  const Grid& grid = basis.grid();
  for (int k = 0; k < basis.size(); ++k) {
    const Mat w = basis.values(k, t);
    const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    for (Face f : grid.faces()) {
      if (!bounds.is_dirichlet(f)) continue;
      for (int node = 0; node < grid.size(); ++node)
        if (grid.on_face(node, f) && w.col(node).cwiseAbs().maxCoeff() > 1e-10 * scale)
          throw Error(ErrorCode::BasisBoundaryViolation, "basis function " + basis.functions()[k].label +
                                                             " does not vanish on Dirichlet face " +
                                                             std::string(face_name(f)));
    }
  }
}

Vec project_dynamics(const PdeProblem& problem, const BasisSet& basis, const BoundarySpec& bounds, const Vec& a,
                     double t) {
  const int K = basis.size();
  if (K == 0) return Vec();
  if (a.size() != K) throw Error(ErrorCode::ShapeMismatch, "coefficient vector has wrong size");
  if (problem.n_state != basis.n_state()) throw Error(ErrorCode::ShapeMismatch, "basis and problem disagree on n");
  const Grid& grid = basis.grid();
  const int n = problem.n_state;
  const int m = grid.dims();
  const Vec q = grid.quadrature_weights();
  const Mat M = mass_matrix(basis, t);

  const Mat phi = combine(basis, a, t, -1);
  std::vector<Mat> grad_axis;
  for (int ax = 0; ax < m; ++ax) grad_axis.push_back(combine(basis, a, t, ax));
  auto node_grad = [&](int node) {
    Mat g(n, m);
    for (int ax = 0; ax < m; ++ax) g.col(ax) = grad_axis[ax].col(node);
    return g;
  };

  // Pointwise residual r = h + ẇa (the part tested against w).
  Mat residual = Mat::Zero(n, grid.size());
  if (problem.has_reaction())
    for (int node = 0; node < grid.size(); ++node)
      residual.col(node) = problem.h(phi.col(node), node_grad(node), grid.coords(node), t);
  if (!basis.is_static())
    for (int k = 0; k < K; ++k) residual += a(k) * basis.time_derivative(k, t);

  std::vector<Mat> flux_axis(m, Mat::Zero(n, grid.size()));
  if (problem.has_diffusion())
    for (int node = 0; node < grid.size(); ++node) {
      const Mat G = problem.eval_flux(node_grad(node), grid.coords(node), t);
      for (int ax = 0; ax < m; ++ax) flux_axis[ax].col(node) = G.col(ax);
    }

  Vec rhs(K);
  for (int k = 0; k < K; ++k) {
    double r = -weighted_dot(basis.values(k, t), residual, q);
    if (problem.has_diffusion())
      for (int ax = 0; ax < m; ++ax) r -= weighted_dot(basis.gradients(k, ax, t), flux_axis[ax], q);
    rhs(k) = r;
  }

  // Boundary flux from Neumann data; Dirichlet faces drop out because the basis vanishes there.
  if (problem.has_diffusion()) {
    for (Face f : grid.faces()) {
      const auto* cond = bounds.at(f);
      if (!cond || cond->kind != BoundaryKind::Neumann) continue;
      const int axis = face_axis(f);
      const double sign = face_normal_sign(f);
      for (int node = 0; node < grid.size(); ++node) {
        if (!grid.on_face(node, f)) continue;
        const Vec x = grid.coords(node);
        Mat g = node_grad(node);
        if (cond->value) g.col(axis) = sign * cond->value(x, t);
        else g.col(axis).setZero();
        const Vec flux_n = sign * problem.eval_flux(g, x, t).col(axis);
        const double wf = face_weight(grid, node, axis);
        for (int k = 0; k < K; ++k) rhs(k) += wf * basis.values(k, t).col(node).dot(flux_n);
      }
    }
  }
  return M.ldlt().solve(rhs);
}

Vec project_dynamics(const PdeProblem& problem, const BasisSet& basis, const BoundarySpec& bounds, double t) {
  return project_dynamics(problem, basis, bounds, basis.coefficients(), t);
}

BasisSet add_basis(const BasisSet& basis, const BasisFunction& w, double t) {
  auto fns = basis.functions();
  fns.push_back(w);
  Vec a(basis.size() + 1);
  a << basis.coefficients(), 0.0;
  BasisSet out(basis.grid(), basis.n_state(), std::move(fns), a);
  mass_matrix(out, t);
  return out;
}

Removal remove_basis(const BasisSet& basis, int index, double t) {
  if (index < 0 || index >= basis.size()) throw Error(ErrorCode::BadParams, "basis index out of range");
  const double ai = basis.coefficients()(index);
  const double disturbance = std::sqrt(integrate_squared(Field(ai * basis.values(index, t)), basis.grid()));
  auto fns = basis.functions();
  fns.erase(fns.begin() + index);
  Vec a(basis.size() - 1);
  for (int k = 0, j = 0; k < basis.size(); ++k)
    if (k != index) a(j++) = basis.coefficients()(k);
  return {BasisSet(basis.grid(), basis.n_state(), std::move(fns), a), disturbance};
}

Field reconstruct(const BasisSet& basis, double t) { return Field(combine(basis, basis.coefficients(), t, -1)); }

Vec project_field(const BasisSet& basis, const Field& field, double t) {
  require_shape(field, basis.grid(), basis.n_state());
  const Mat M = mass_matrix(basis, t);
  const Vec q = basis.grid().quadrature_weights();
  Vec b(basis.size());
  for (int k = 0; k < basis.size(); ++k) b(k) = weighted_dot(basis.values(k, t), field.values, q);
  return M.ldlt().solve(b);
}

BasisFunction sine_mode(const Grid& grid, int n_state, int component, int kx, int ky) {
  if (component < 0 || component >= n_state) throw Error(ErrorCode::BadParams, "component out of range");
  const double pi = std::numbers::pi;
  const double wx = kx * pi / grid.length(0);
  const bool two_d = grid.dims() == 2;
  if (two_d && ky < 1) throw Error(ErrorCode::BadParams, "2-D sine modes need ky ≥ 1");
  const double wy = two_d ? ky * pi / grid.length(1) : 0.0;
  const int m = grid.dims();
  BasisFunction b;
  b.label = two_d ? "sin(" + std::to_string(kx) + "," + std::to_string(ky) + ")" : "sin" + std::to_string(kx);
  b.value = [=](const Vec& x, double) {
    Vec v = Vec::Zero(n_state);
    v(component) = std::sin(wx * x(0)) * (two_d ? std::sin(wy * x(1)) : 1.0);
    return v;
  };
  b.grad = [=](const Vec& x, double) {
    Mat g = Mat::Zero(n_state, m);
    const double sy = two_d ? std::sin(wy * x(1)) : 1.0;
    g(component, 0) = wx * std::cos(wx * x(0)) * sy;
    if (two_d) g(component, 1) = std::sin(wx * x(0)) * wy * std::cos(wy * x(1));
    return g;
  };
  return b;
}

std::vector<BasisFunction> sine_modes(const Grid& grid, int n_state, int count) {
  std::vector<BasisFunction> out;
  if (grid.dims() == 1) {
    for (int c = 0; c < n_state; ++c)
      for (int k = 1; k <= count; ++k) out.push_back(sine_mode(grid, n_state, c, k));
    return out;
  }
  // Lowest modes by wavenumber magnitude.
  std::vector<std::pair<double, std::pair<int, int>>> order;
  for (int kx = 1; kx <= count; ++kx)
    for (int ky = 1; ky <= count; ++ky)
      order.push_back({std::pow(kx / grid.length(0), 2) + std::pow(ky / grid.length(1), 2), {kx, ky}});
  std::stable_sort(order.begin(), order.end(), [](auto& l, auto& r) { return l.first < r.first; });
  for (int c = 0; c < n_state; ++c)
    for (int i = 0; i < count; ++i)
      out.push_back(sine_mode(grid, n_state, c, order[i].second.first, order[i].second.second));
  return out;
}

BasisFunction gaussian_bump(int n_state, int component, const Vec& center, double width) {
  if (!(width > 0.0)) throw Error(ErrorCode::BadParams, "bump width must be positive");
  if (component < 0 || component >= n_state) throw Error(ErrorCode::BadParams, "component out of range");
  BasisFunction b;
  b.label = "bump";
  const double s2 = width * width;
  b.value = [=](const Vec& x, double) {
    Vec v = Vec::Zero(n_state);
    v(component) = std::exp(-(x - center).squaredNorm() / (2.0 * s2));
    return v;
  };
  b.grad = [=](const Vec& x, double) {
    Mat g = Mat::Zero(n_state, x.size());
    const double e = std::exp(-(x - center).squaredNorm() / (2.0 * s2));
    g.row(component) = (-(x - center) / s2 * e).transpose();
    return g;
  };
  return b;
}

GalerkinTrajectory galerkin_run(const PdeProblem& problem, const BasisSet& basis, const BoundarySpec& bounds,
                                double t0, double t1, double dt) {
  if (!(dt > 0.0) || !(t1 >= t0)) throw Error(ErrorCode::BadParams, "need dt > 0 and t1 ≥ t0");
  check_basis_boundary(basis, bounds, t0);
  auto f = [&](const Vec& a, double t) { return project_dynamics(problem, basis, bounds, a, t); };
  GalerkinTrajectory traj;
  Vec a = basis.coefficients();
  double t = t0;
  const auto steps = static_cast<long>(std::ceil((t1 - t0) / dt - 1e-9));
  for (long s = 0;; ++s) {
    const Vec k1 = f(a, t);
    traj.t.push_back(t);
    traj.a.push_back(a);
    traj.a_dot.push_back(k1);
    if (s == steps) break;
    const double h = std::min(dt, t1 - t);
    const Vec k2 = f(a + 0.5 * h * k1, t + 0.5 * h);
    const Vec k3 = f(a + 0.5 * h * k2, t + 0.5 * h);
    const Vec k4 = f(a + h * k3, t + h);
    a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = s + 1 == steps ? t1 : t0 + (s + 1) * dt;
    if (!all_finite(a)) throw Error(ErrorCode::NonFiniteState, "coefficients diverged at t = " + fmt_num(t));
  }
  return traj;
}

DecaySeries galerkin_perturbation(const PdeProblem& problem, const BasisSet& basis, const BoundarySpec& bounds,
                                  const Vec& a1, const Vec& a2, double t0, double t1, double dt) {
  BasisSet b1 = basis, b2 = basis;
  b1.set_coefficients(a1);
  b2.set_coefficients(a2);
  const auto r1 = galerkin_run(problem, b1, bounds, t0, t1, dt);
  const auto r2 = galerkin_run(problem, b2, bounds, t0, t1, dt);
  DecaySeries s;
  const bool fixed = basis.is_static();
  const Mat M0 = fixed ? mass_matrix(basis, t0) : Mat();
  for (std::size_t k = 0; k < r1.t.size(); ++k) {
    const Vec d = r1.a[k] - r2.a[k];
    const Mat M = fixed ? M0 : mass_matrix(basis, r1.t[k]);
    s.times.push_back(r1.t[k]);
    s.d2.push_back(d.dot(M * d));
  }
  return s;
}

void GalerkinTrajectory::write_csv(const std::string& path) const {
  auto out = open_output(path);
  const Eigen::Index K = a.empty() ? 0 : a.front().size();
  out << "t";
  for (Eigen::Index k = 0; k < K; ++k) out << ",a" << k;
  for (Eigen::Index k = 0; k < K; ++k) out << ",adot" << k;
  out << "\n";
  for (std::size_t s = 0; s < t.size(); ++s) {
    out << fmt_num(t[s]);
    for (Eigen::Index k = 0; k < K; ++k) out << "," << fmt_num(a[s](k));
    for (Eigen::Index k = 0; k < K; ++k) out << "," << fmt_num(a_dot[s](k));
    out << "\n";
  }
}

}  // namespace contraction
