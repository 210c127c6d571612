#include "contraction/hamilton.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "contraction/error.hpp"
#include "contraction/io.hpp"

namespace contraction {

namespace {

double fd_step(double v) { return 1e-5 * std::max(1.0, std::abs(v)); }

// Jacobian of `f` with respect to the vector selected by `which` (0 = p, 1 = x);
// row i holds ∂f/∂v_i.
template <class F>
Mat fd_jacobian_rows(const F& f, const Vec& p, const Vec& x, double t, int which) {
  const Vec& base = which == 0 ? p : x;
  const int n = static_cast<int>(base.size());
  Mat out;
  for (int i = 0; i < n; ++i) {
    Vec up = base, dn = base;
    const double h = fd_step(base(i));
    up(i) += h;
    dn(i) -= h;
    const Vec fu = which == 0 ? Vec(f(up, x, t)) : Vec(f(p, up, t));
    const Vec fd = which == 0 ? Vec(f(dn, x, t)) : Vec(f(p, dn, t));
    if (i == 0) out.resize(n, fu.size());
    out.row(i) = ((fu - fd) / (2.0 * h)).transpose();
  }
  return out;
}

Vec fd_gradient(const Hamiltonian::Scalar& h, const Vec& p, const Vec& x, double t, int which) {
  auto wrap = [&](const Vec& pp, const Vec& xx, double tt) {
    Vec v(1);
    v(0) = h(pp, xx, tt);
    return v;
  };
  return fd_jacobian_rows(wrap, p, x, t, which).col(0);
}

double rel_residual(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

struct Derivs {
  Vec xdot, pdot;
  Mat Hdot;
};

Derivs riccati_rhs(const Hamiltonian& ham, const Vec& x, const Vec& p, const Mat& H, double t) {
  const Mat hxx = ham.d2h_dx2(p, x, t);
  const Mat hxp = ham.d2h_dxdp(p, x, t);
  const Mat hpp = ham.d2h_dp2(p, x, t);
  Derivs d;
  d.xdot = ham.dh_dp(p, x, t);
  d.pdot = -ham.dh_dx(p, x, t);
  d.Hdot = -hxx - hxp * H - H * hxp.transpose() - H * hpp * H;
  return d;
}

Derivs inverse_rhs(const Hamiltonian& ham, const Vec& x, const Vec& p, const Mat& G, double t) {
  const Mat hxx = ham.d2h_dx2(p, x, t);
  const Mat hxp = ham.d2h_dxdp(p, x, t);
  const Mat hpp = ham.d2h_dp2(p, x, t);
  Derivs d;
  d.xdot = ham.dh_dp(p, x, t);
  d.pdot = -ham.dh_dx(p, x, t);
  d.Hdot = G * hxx * G + G * hxp + hxp.transpose() * G + hpp;
  return d;
}

void require_complete(const Hamiltonian& ham) {
  if (!ham.dh_dx || !ham.dh_dp || !ham.d2h_dx2 || !ham.d2h_dxdp || !ham.d2h_dp2)
    throw Error(ErrorCode::BadParams, "Hamiltonian is missing derivative callables");
}

// Generic RK4 over (x, p, M) with signed step.
template <class Rhs>
void rk4(const Rhs& rhs, Vec& x, Vec& p, Mat& m, double t, double h) {
  const Derivs k1 = rhs(x, p, m, t);
  const Derivs k2 = rhs(x + 0.5 * h * k1.xdot, p + 0.5 * h * k1.pdot, m + 0.5 * h * k1.Hdot, t + 0.5 * h);
  const Derivs k3 = rhs(x + 0.5 * h * k2.xdot, p + 0.5 * h * k2.pdot, m + 0.5 * h * k2.Hdot, t + 0.5 * h);
  const Derivs k4 = rhs(x + h * k3.xdot, p + h * k3.pdot, m + h * k3.Hdot, t + h);
  x += h / 6.0 * (k1.xdot + 2.0 * k2.xdot + 2.0 * k3.xdot + k4.xdot);
  p += h / 6.0 * (k1.pdot + 2.0 * k2.pdot + 2.0 * k3.pdot + k4.pdot);
  m += h / 6.0 * (k1.Hdot + 2.0 * k2.Hdot + 2.0 * k3.Hdot + k4.Hdot);
  m = symmetric_part(m);
}

}  // namespace

Hamiltonian with_finite_difference_hessians(Hamiltonian ham) {
  if (!ham.h && (!ham.dh_dx || !ham.dh_dp))
    throw Error(ErrorCode::BadParams, "Hamiltonian needs h or both first derivatives");
  if (!ham.dh_dx) {
    auto h = ham.h;
    ham.dh_dx = [h](const Vec& p, const Vec& x, double t) { return fd_gradient(h, p, x, t, 1); };
  }
  if (!ham.dh_dp) {
    auto h = ham.h;
    ham.dh_dp = [h](const Vec& p, const Vec& x, double t) { return fd_gradient(h, p, x, t, 0); };
  }
  if (!ham.d2h_dx2) {
    auto g = ham.dh_dx;
    ham.d2h_dx2 = [g](const Vec& p, const Vec& x, double t) -> Mat {
      return symmetric_part(fd_jacobian_rows(g, p, x, t, 1));
    };
  }
  if (!ham.d2h_dxdp) {
    auto g = ham.dh_dp;
    ham.d2h_dxdp = [g](const Vec& p, const Vec& x, double t) -> Mat { return fd_jacobian_rows(g, p, x, t, 1); };
  }
  if (!ham.d2h_dp2) {
    auto g = ham.dh_dp;
    ham.d2h_dp2 = [g](const Vec& p, const Vec& x, double t) -> Mat {
      return symmetric_part(fd_jacobian_rows(g, p, x, t, 0));
    };
  }
  return ham;
}

HamiltonianCheck check_hamiltonian(const Hamiltonian& ham, const Vec& p, const Vec& x, double t) {
  require_complete(ham);
  HamiltonianCheck c;
  const Mat hxx = ham.d2h_dx2(p, x, t), hpp = ham.d2h_dp2(p, x, t), hxp = ham.d2h_dxdp(p, x, t);
  c.symmetry_residual = std::max((hxx - hxx.transpose()).cwiseAbs().maxCoeff(),
                                 (hpp - hpp.transpose()).cwiseAbs().maxCoeff());
  if (ham.h) {
    c.first_derivative_residual = std::max(rel_residual(ham.dh_dx(p, x, t), fd_gradient(ham.h, p, x, t, 1)),
                                           rel_residual(ham.dh_dp(p, x, t), fd_gradient(ham.h, p, x, t, 0)));
  }
  const Mat fxx = fd_jacobian_rows(ham.dh_dx, p, x, t, 1);
  const Mat fpp = fd_jacobian_rows(ham.dh_dp, p, x, t, 0);
  const Mat fxp = fd_jacobian_rows(ham.dh_dp, p, x, t, 1);
  // Cross-derivative consistency: ∂/∂p of h_x must be the transpose of ∂/∂x of h_p.
  const Mat fpx = fd_jacobian_rows(ham.dh_dx, p, x, t, 0);
  c.second_derivative_residual = std::max(
      {rel_residual(hxx, fxx), rel_residual(hpp, fpp), rel_residual(hxp, fxp), rel_residual(hxp, fpx.transpose())});
  return c;
}

void validate_hamiltonian(const Hamiltonian& ham, const Vec& p, const Vec& x, double t) {
  const HamiltonianCheck c = check_hamiltonian(ham, p, x, t);
  if (c.symmetry_residual > 1e-10)
    throw Error(ErrorCode::DerivativeMismatch, "Hamiltonian Hessian blocks are not symmetric");
  if (c.first_derivative_residual > 1e-5 || c.second_derivative_residual > 1e-5)
    throw Error(ErrorCode::DerivativeMismatch, "Hamiltonian derivatives disagree with finite differences");
}

InverseCharState invert(const CharState& s) {
  Eigen::FullPivLU<Mat> lu(s.H);
  const double scale = std::max(1.0, s.H.cwiseAbs().maxCoeff());
  if (!lu.isInvertible() || lu.rcond() < 1e-14 || std::abs(lu.determinant()) < 1e-300 * scale)
    throw Error(ErrorCode::SingularHessian, "H is singular");
  return {s.x, s.p, symmetric_part(lu.inverse()), s.t};
}

CharState characteristic_step(const Hamiltonian& ham, const CharState& s, double dt, Direction direction) {
  require_complete(ham);
  const double h = direction_sign(direction) * dt;
  CharState out = s;
  rk4([&](const Vec& x, const Vec& p, const Mat& H, double t) { return riccati_rhs(ham, x, p, H, t); }, out.x,
      out.p, out.H, s.t, h);
  out.t = s.t + h;
  if (!all_finite(out.x) || !all_finite(out.p) || !all_finite(out.H))
    throw Error(ErrorCode::NonFiniteState, "characteristic escaped at t = " + fmt_num(out.t));
  return out;
}

InverseCharState inverse_riccati_step(const Hamiltonian& ham, const InverseCharState& s, double dt,
                                      Direction direction) {
  require_complete(ham);
  const double h = direction_sign(direction) * dt;
  InverseCharState out = s;
  rk4([&](const Vec& x, const Vec& p, const Mat& G, double t) { return inverse_rhs(ham, x, p, G, t); }, out.x,
      out.p, out.H_inv, s.t, h);
  out.t = s.t + h;
  if (!all_finite(out.H_inv)) throw Error(ErrorCode::SingularHessian, "H⁻¹ diverged at t = " + fmt_num(out.t));
  if (!all_finite(out.x) || !all_finite(out.p))
    throw Error(ErrorCode::NonFiniteState, "characteristic escaped at t = " + fmt_num(out.t));
  return out;
}

std::vector<CharState> integrate_characteristic(const Hamiltonian& ham, const CharState& s0, double dt, int steps,
                                                Direction direction) {
  std::vector<CharState> out{s0};
  out.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k < steps; ++k) out.push_back(characteristic_step(ham, out.back(), dt, direction));
  return out;
}

std::optional<int> nested_positivity_order(const std::vector<Mat>& chain) {
  if (chain.empty()) return std::nullopt;
  Mat basis = Mat::Identity(chain.front().rows(), chain.front().rows());
  for (std::size_t j = 0; j < chain.size(); ++j) {
    const Mat sym = symmetric_part(chain[j]);
    const double tol = 1e-9 * std::max(1.0, sym.cwiseAbs().maxCoeff());
    const Mat restricted = basis.transpose() * sym * basis;
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetric_part(restricted));
    const Vec& ev = es.eigenvalues();
    if (ev.minCoeff() < -tol) return std::nullopt;
    if (ev.minCoeff() > tol) return static_cast<int>(j) + 1;
    int keep = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) <= tol) ++keep;
    basis = basis * es.eigenvectors().leftCols(keep);
  }
  return std::nullopt;
}

namespace {

LieResult lie_chain(const Hamiltonian& ham, const std::vector<CharState>& traj, int j_max, Direction direction,
                    bool x_chain) {
  require_complete(ham);
  if (j_max < 1 || j_max > 3) throw Error(ErrorCode::BadParams, "j_max must be 1, 2 or 3");
  const int depth = j_max - 1;
  const int n = static_cast<int>(traj.size());
  if (n < 2 * depth + 1)
    throw Error(ErrorCode::InsufficientTrajectory,
                "need " + std::to_string(2 * depth + 1) + " samples for order " + std::to_string(j_max));
  const double s = direction_sign(direction);

  std::vector<Mat> hxp(n);
  std::vector<std::vector<Mat>> chain(j_max, std::vector<Mat>(n));
  for (int k = 0; k < n; ++k) {
    const auto& c = traj[k];
    hxp[k] = ham.d2h_dxdp(c.p, c.x, c.t);
    chain[0][k] = x_chain ? Mat(-s * ham.d2h_dx2(c.p, c.x, c.t)) : Mat(s * ham.d2h_dp2(c.p, c.x, c.t));
  }
  for (int j = 1; j < j_max; ++j) {
    for (int k = j; k < n - j; ++k) {
      const double dtau = s * (traj[k + 1].t - traj[k - 1].t);
      if (!(std::abs(dtau) > 0.0))
        throw Error(ErrorCode::InsufficientTrajectory, "trajectory samples share a time stamp");
      const Mat& L = chain[j - 1][k];
      const Mat deriv = (chain[j - 1][k + 1] - chain[j - 1][k - 1]) / dtau;
      chain[j][k] = x_chain ? Mat(deriv - s * (hxp[k] * L + L * hxp[k].transpose()))
                            : Mat(deriv + s * (hxp[k].transpose() * L + L * hxp[k]));
    }
  }

  LieResult result;
  int worst = 0;
  int tested = 0;
  bool failed = false;
  int first_fail = -1;
  for (int k = depth; k < n - depth; ++k) {
    std::vector<Mat> local;
    for (int j = 0; j < j_max; ++j) local.push_back(chain[j][k]);
    const auto order = nested_positivity_order(local);
    ++tested;
    if (!order) {
      failed = true;
      if (first_fail < 0) first_fail = k;
      continue;
    }
    worst = std::max(worst, *order);
  }
  std::ostringstream os;
  os << (x_chain ? "x-chain" : "p-chain") << ", j_max " << j_max << ", " << tested << " samples: ";
  if (failed) {
    os << "no positive order at t = " << fmt_num(traj[first_fail].t);
  } else {
    result.order = worst;
    os << "order " << worst;
  }
  result.report = os.str();
  return result;
}

}  // namespace

LieResult lie_condition_x(const Hamiltonian& ham, const std::vector<CharState>& trajectory, int j_max,
                          Direction direction) {
  return lie_chain(ham, trajectory, j_max, direction, true);
}

LieResult lie_condition_p(const Hamiltonian& ham, const std::vector<CharState>& trajectory, int j_max,
                          Direction direction) {
  return lie_chain(ham, trajectory, j_max, direction, false);
}

ConvexityReport convexity_monitor(const Hamiltonian& ham, const CharState& s0, double t_span, double dt,
                                  Direction direction) {
  if (!(dt > 0.0) || !(t_span >= 0.0)) throw Error(ErrorCode::BadParams, "need dt > 0 and t_span ≥ 0");
  if (min_sym_eigenvalue(s0.H) < -kConvexityTolerance)
    throw Error(ErrorCode::BadParams, "initial Hessian is not positive semidefinite");
  ConvexityReport r;
  const auto steps = static_cast<int>(std::ceil(t_span / dt - 1e-9));
  CharState s = s0;
  auto record = [&](const CharState& c) {
    const double e = min_sym_eigenvalue(c.H);
    r.trajectory.push_back(c);
    r.min_eig.push_back(e);
    if (e < -kConvexityTolerance && !r.lost_at) r.lost_at = c.t;
    if (std::abs(e) <= 1e-12) r.semidefinite = true;
  };
  record(s);
  for (int k = 0; k < steps; ++k) {
    const double h = std::min(dt, t_span - k * dt);
    try {
      s = characteristic_step(ham, s, h, direction);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteState) throw;
      // Finite-time blow-up of H: the solution stops being smooth here.
      r.escaped = true;
      if (!r.lost_at) r.lost_at = s.t + direction_sign(direction) * h;
      break;
    }
    record(s);
  }
  return r;
}

void write_characteristic_csv(const std::string& path, const std::vector<CharState>& trajectory) {
  auto out = open_output(path);
  const int m = trajectory.empty() ? 0 : static_cast<int>(trajectory.front().x.size());
  out << "t";
  for (int i = 0; i < m; ++i) out << ",x" << i;
  for (int i = 0; i < m; ++i) out << ",p" << i;
  for (int i = 0; i < m; ++i) out << ",eig" << i;
  out << "\n";
  for (const auto& c : trajectory) {
    out << fmt_num(c.t);
    for (int i = 0; i < m; ++i) out << "," << fmt_num(c.x(i));
    for (int i = 0; i < m; ++i) out << "," << fmt_num(c.p(i));
    const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(symmetric_part(c.H), Eigen::EigenvaluesOnly).eigenvalues();
    for (int i = 0; i < m; ++i) out << "," << fmt_num(ev(i));
    out << "\n";
  }
}

}  // namespace contraction
