#include "contraction/optimal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "contraction/error.hpp"
#include "contraction/io.hpp"

namespace contraction {

namespace {

Mat checked_inverse(const Mat& a, ErrorCode code, const char* what) {
  Mat inv;
  if (!spd_inverse(a, inv)) throw Error(code, std::string(what) + " is not symmetric positive definite");
  return inv;
}

Mat fd_plant_jacobian(const PlantFn& f, const Vec& x, const Vec& u, double t, bool wrt_x) {
  const Vec& base = wrt_x ? x : u;
  Mat out;
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    Vec up = base, dn = base;
    const double h = 1e-6 * std::max(1.0, std::abs(base(i)));
    up(i) += h;
    dn(i) -= h;
    const Vec d = wrt_x ? Vec(f(up, u, t) - f(dn, u, t)) : Vec(f(x, up, t) - f(x, dn, t));
    if (i == 0) out.resize(d.size(), base.size());
    out.col(i) = d / (2.0 * h);
  }
  return out;
}

Mat plant_dx(const ControlProblem& cp, const Vec& x, const Vec& u, double t) {
  if (cp.A) return cp.A(t);
  if (cp.df_dx) return cp.df_dx(x, u, t);
  return fd_plant_jacobian(cp.f, x, u, t, true);
}

Mat plant_du(const ControlProblem& cp, const Vec& x, const Vec& u, double t) {
  if (cp.B) return cp.B(t);
  if (cp.df_du) return cp.df_du(x, u, t);
  return fd_plant_jacobian(cp.f, x, u, t, false);
}

// Samples (x, p, H) on a uniform grid, linearly interpolated in between.
struct ReferencePath {
  double t0 = 0.0, h = 1.0;
  std::vector<CharState> s;

  void at(double t, Vec& x, Vec& p, Mat& H) const {
    double u = (t - t0) / h;
    auto k = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, double(s.size() - 2)));
    const double w = std::clamp(u - double(k), 0.0, 1.0);
    x = (1 - w) * s[k].x + w * s[k + 1].x;
    p = (1 - w) * s[k].p + w * s[k + 1].p;
    H = (1 - w) * s[k].H + w * s[k + 1].H;
  }
};

}  // namespace

Vec ControlProblem::x_d(double t) const {
  return cost && cost->x_d ? cost->x_d(t) : Vec(Vec::Zero(n_state));
}

Vec ControlProblem::u_d(double t) const {
  return cost && cost->u_d ? cost->u_d(t) : Vec(Vec::Zero(n_control));
}

double ControlProblem::running_cost(const Vec& x, const Vec& u, double t) const {
  if (!cost) throw Error(ErrorCode::NoClosedFormControl, "problem has no quadratic cost");
  const Vec dx = x - x_d(t);
  const Vec du = u - u_d(t);
  return 0.5 * dx.dot(cost->state_weight * dx) + 0.5 * du.dot(cost->control_weight * du);
}

ControlProblem ControlProblem::linear_quadratic(TimeMatFn A, TimeMatFn B, const Mat& state_weight,
                                                const Mat& control_weight, const Mat& P_f, double t_f) {
  ControlProblem cp;
  const Mat A0 = A(0.0), B0 = B(0.0);
  cp.n_state = static_cast<int>(A0.rows());
  cp.n_control = static_cast<int>(B0.cols());
  if (A0.cols() != A0.rows() || B0.rows() != A0.rows() || state_weight.rows() != A0.rows() ||
      control_weight.rows() != B0.cols() || P_f.rows() != A0.rows())
    throw Error(ErrorCode::ShapeMismatch, "inconsistent LQ dimensions");
  cp.A = A;
  cp.B = B;
  cp.f = [A, B](const Vec& x, const Vec& u, double t) -> Vec { return A(t) * x + B(t) * u; };
  cp.df_dx = [A](const Vec&, const Vec&, double t) -> Mat { return A(t); };
  cp.df_du = [B](const Vec&, const Vec&, double t) -> Mat { return B(t); };
  cp.cost = QuadraticCost{state_weight, control_weight, {}, {}};
  cp.terminal = [P_f](const Vec& x) { return 0.5 * x.dot(P_f * x); };
  cp.terminal_grad = [P_f](const Vec& x) -> Vec { return P_f * x; };
  cp.terminal_hessian = [P_f](const Vec&) -> Mat { return P_f; };
  cp.t_f = t_f;
  return cp;
}

ControlProblem ControlProblem::linear_quadratic(const Mat& A, const Mat& B, const Mat& state_weight,
                                                const Mat& control_weight, const Mat& P_f, double t_f) {
  return linear_quadratic([A](double) { return A; }, [B](double) { return B; }, state_weight, control_weight, P_f,
                          t_f);
}

Vec optimal_control(const ControlProblem& cp, const Vec& p, const Vec& x, double t) {
  if (!cp.cost || !cp.control_affine)
    throw Error(ErrorCode::NoClosedFormControl, "closed-form minimizer needs a quadratic cost and affine control");
  const Vec ud = cp.u_d(t);
  const Mat B = plant_du(cp, x, ud, t);
  return ud - cp.cost->control_weight.ldlt().solve(B.transpose() * p);
}

Hamiltonian synthesize_hamiltonian_control(const ControlProblem& cp) {
  if (!cp.cost || !cp.control_affine)
    throw Error(ErrorCode::NoClosedFormControl, "closed-form minimizer needs a quadratic cost and affine control");
  if (!cp.f) throw Error(ErrorCode::BadParams, "control problem has no plant");
  const Mat q_inv = checked_inverse(cp.cost->control_weight, ErrorCode::BadParams, "control weight");
  checked_inverse(cp.cost->state_weight, ErrorCode::BadParams, "state weight");

  Hamiltonian ham;
  ham.dim = cp.n_state;
  ham.h = [cp](const Vec& p, const Vec& x, double t) {
    const Vec u = optimal_control(cp, p, x, t);
    return cp.running_cost(x, u, t) + p.dot(cp.f(x, u, t));
  };
  // Envelope theorem: ∂h/∂u vanishes at u*, so only explicit x and p dependence remains.
  ham.dh_dx = [cp](const Vec& p, const Vec& x, double t) -> Vec {
    const Vec u = optimal_control(cp, p, x, t);
    return cp.cost->state_weight * (x - cp.x_d(t)) + plant_dx(cp, x, u, t).transpose() * p;
  };
  ham.dh_dp = [cp](const Vec& p, const Vec& x, double t) -> Vec { return cp.f(x, optimal_control(cp, p, x, t), t); };
  if (cp.A && cp.B) {
    const Mat R = cp.cost->state_weight;
    auto A = cp.A;
    auto B = cp.B;
    ham.d2h_dx2 = [R](const Vec&, const Vec&, double) -> Mat { return R; };
    ham.d2h_dxdp = [A](const Vec&, const Vec&, double t) -> Mat { return A(t).transpose(); };
    ham.d2h_dp2 = [B, q_inv](const Vec&, const Vec&, double t) -> Mat {
      const Mat b = B(t);
      return -b * q_inv * b.transpose();
    };
    return ham;
  }
  return with_finite_difference_hessians(ham);
}

OpenLoopResult simulate_open_loop(const ControlProblem& cp, const Vec& x0, double dt, const std::vector<Vec>& u) {
  if (u.size() < 3 || u.size() % 2 == 0)
    throw Error(ErrorCode::ShapeMismatch, "control must be sampled on a half-step grid (2N+1 samples)");
  const std::size_t n_steps = (u.size() - 1) / 2;
  OpenLoopResult r;
  r.x.push_back(x0);
  Vec x = x0;
  double t = cp.t0;
  // Simpson over [t, t+dt] uses the running cost at both ends and the midpoint.
  for (std::size_t k = 0; k < n_steps; ++k) {
    const Vec& u0 = u[2 * k];
    const Vec& um = u[2 * k + 1];
    const Vec& u1 = u[2 * k + 2];
    const Vec k1 = cp.f(x, u0, t);
    const Vec k2 = cp.f(x + 0.5 * dt * k1, um, t + 0.5 * dt);
    const Vec k3 = cp.f(x + 0.5 * dt * k2, um, t + 0.5 * dt);
    const Vec k4 = cp.f(x + dt * k3, u1, t + dt);
    // Midpoint state from the cubic Hermite interpolant of the step.
    const Vec x_next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const Vec x_mid = 0.5 * (x + x_next) + dt / 8.0 * (k1 - k4);
    r.cost += dt / 6.0 *
              (cp.running_cost(x, u0, t) + 4.0 * cp.running_cost(x_mid, um, t + 0.5 * dt) +
               cp.running_cost(x_next, u1, t + dt));
    x = x_next;
    t += dt;
    if (!all_finite(x)) throw Error(ErrorCode::NonFiniteState, "open-loop state diverged");
    r.x.push_back(x);
  }
  if (cp.terminal) r.cost += cp.terminal(x);
  return r;
}

std::vector<HjbSolution> hjb_solve(const ControlProblem& cp, const std::vector<Vec>& x0_set, double dt) {
  if (!(dt > 0.0) || !(cp.t_f > cp.t0)) throw Error(ErrorCode::BadParams, "need dt > 0 and t_f > t0");
  if (!cp.terminal_grad || !cp.terminal_hessian)
    throw Error(ErrorCode::BadParams, "terminal cost gradient and Hessian are required");
  const Hamiltonian ham = synthesize_hamiltonian_control(cp);
  const auto n_steps = static_cast<int>(std::ceil((cp.t_f - cp.t0) / dt - 1e-9));
  const double step = (cp.t_f - cp.t0) / n_steps;
  const double half = 0.5 * step;

  auto backward = [&](const Vec& x_f) {
    CharState s{x_f, cp.terminal_grad(x_f), symmetric_part(cp.terminal_hessian(x_f)), cp.t_f};
    return integrate_characteristic(ham, s, half, 2 * n_steps, Direction::Backward);
  };

  std::vector<HjbSolution> out;
  for (const Vec& x0 : x0_set) {
    if (x0.size() != cp.n_state) throw Error(ErrorCode::ShapeMismatch, "initial state has wrong size");
    HjbSolution sol;
    sol.x0 = x0;

    // Newton shooting on the terminal state so the characteristic passes through x0.
    Vec x_f = x0;
    std::vector<CharState> path = backward(x_f);
    Vec miss = path.back().x - x0;
    const double target = 1e-10 * std::max(1.0, x0.norm());
    for (int it = 0; it < 30 && miss.norm() > target; ++it) {
      Mat J(cp.n_state, cp.n_state);
      for (int i = 0; i < cp.n_state; ++i) {
        Vec xp = x_f;
        const double h = 1e-6 * std::max(1.0, std::abs(x_f(i)));
        xp(i) += h;
        J.col(i) = (backward(xp).back().x - path.back().x) / h;
      }
      const Vec delta = J.colPivHouseholderQr().solve(-miss);
      double lambda = 1.0;
      bool improved = false;
      for (int ls = 0; ls < 20; ++ls, lambda *= 0.5) {
        try {
          auto trial = backward(x_f + lambda * delta);
          const Vec trial_miss = trial.back().x - x0;
          if (trial_miss.norm() < miss.norm()) {
            x_f += lambda * delta;
            path = std::move(trial);
            miss = trial_miss;
            improved = true;
            break;
          }
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NonFiniteState) throw;
        }
      }
      if (!improved) break;
    }
    sol.shooting_residual = miss.norm();
    sol.backward = path;

    for (const auto& c : path) {
      if (min_sym_eigenvalue(c.H) < -kConvexityTolerance && !sol.lost_at) {
        sol.convexity_lost = true;
        sol.lost_at = c.t;
      }
    }

    ReferencePath ref;
    ref.t0 = cp.t0;
    ref.h = half;
    ref.s.assign(path.rbegin(), path.rend());

    auto feedback = [&](const Vec& x, double t, Vec* p_out, Mat* H_out) {
      Vec xc, pc;
      Mat H;
      ref.at(t, xc, pc, H);
      const Vec p = pc + H * (x - xc);
      if (p_out) *p_out = p;
      if (H_out) *H_out = H;
      return optimal_control(cp, p, x, t);
    };
    auto closed = [&](const Vec& x, double t) -> Vec { return cp.f(x, feedback(x, t, nullptr, nullptr), t); };

    Vec x = x0;
    for (int k = 0; k <= 2 * n_steps; ++k) {
      const double t = cp.t0 + k * half;
      Vec p;
      Mat H;
      const Vec u = feedback(x, t, &p, &H);
      sol.t.push_back(t);
      sol.x.push_back(x);
      sol.p.push_back(p);
      sol.u.push_back(u);
      sol.H.push_back(H);
      const Mat B = plant_du(cp, x, u, t);
      sol.gain.push_back(cp.cost->control_weight.ldlt().solve(B.transpose() * H));
      if (k == 2 * n_steps) break;
      const Vec k1 = closed(x, t);
      const Vec k2 = closed(x + 0.5 * half * k1, t + 0.5 * half);
      const Vec k3 = closed(x + 0.5 * half * k2, t + 0.5 * half);
      const Vec k4 = closed(x + half * k3, t + half);
      x += half / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!all_finite(x)) throw Error(ErrorCode::NonFiniteState, "closed-loop replay diverged");
    }
    sol.cost = simulate_open_loop(cp, x0, step, sol.u).cost;
    out.push_back(std::move(sol));
  }
  return out;
}

void HjbSolution::write_csv(const std::string& path) const {
  auto out = open_output(path);
  const int n = x.empty() ? 0 : static_cast<int>(x.front().size());
  const int m = u.empty() ? 0 : static_cast<int>(u.front().size());
  out << "t";
  for (int i = 0; i < n; ++i) out << ",x" << i;
  for (int i = 0; i < n; ++i) out << ",p" << i;
  for (int j = 0; j < m; ++j) out << ",u" << j;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out << ",H" << i << j;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out << ",gain" << i << j;
  out << "\n";
  for (std::size_t k = 0; k < t.size(); ++k) {
    out << fmt_num(t[k]);
    for (int i = 0; i < n; ++i) out << "," << fmt_num(x[k](i));
    for (int i = 0; i < n; ++i) out << "," << fmt_num(p[k](i));
    for (int j = 0; j < m; ++j) out << "," << fmt_num(u[k](j));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out << "," << fmt_num(H[k](i, j));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) out << "," << fmt_num(gain[k](i, j));
    out << "\n";
  }
}

ClosedLoopReport closed_loop_contraction_check(const ControlProblem& cp, const HjbSolution& solved) {
  const Hamiltonian ham = synthesize_hamiltonian_control(cp);
  ClosedLoopReport r;
  bool h_definite = true, w_definite = true, w_semidefinite = true;
  double rate = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < solved.t.size(); ++k) {
    const Mat& H = solved.H[k];
    const Mat hxx = ham.d2h_dx2(solved.p[k], solved.x[k], solved.t[k]);
    const Mat hpp = ham.d2h_dp2(solved.p[k], solved.x[k], solved.t[k]);
    const Mat W = symmetric_part(hxx - H * hpp * H);
    const double wmin = min_sym_eigenvalue(W);
    const double hmin = min_sym_eigenvalue(H);
    r.t.push_back(solved.t[k]);
    r.min_eig_W.push_back(wmin);
    r.min_eig_H.push_back(hmin);
    const double tol = 1e-10 * std::max(1.0, W.cwiseAbs().maxCoeff());
    if (hmin <= 1e-10) h_definite = false;
    if (wmin <= tol) w_definite = false;
    if (wmin < -tol) w_semidefinite = false;
    if (hmin > 1e-10) {
      Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(W, symmetric_part(H));
      rate = std::min(rate, 0.5 * ges.eigenvalues().minCoeff());
    }
  }
  if (h_definite && w_definite) {
    r.classification = Classification::Contracting;
    r.rate = rate;
  } else if (h_definite && w_semidefinite) {
    r.classification = Classification::SemiContracting;
  }
  return r;
}

ObserverProblem ObserverProblem::linear(const Mat& A, const Mat& B, const Mat& C, const Mat& measurement_weight,
                                        const Mat& disturbance_weight, const Mat& Pi0, const Vec& x_hat0) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || C.cols() != A.rows() ||
      measurement_weight.rows() != C.rows() || disturbance_weight.rows() != B.cols() || Pi0.rows() != A.rows() ||
      x_hat0.size() != A.rows())
    throw Error(ErrorCode::ShapeMismatch, "inconsistent observer dimensions");
  ObserverProblem op;
  op.n_state = static_cast<int>(A.rows());
  op.n_meas = static_cast<int>(C.rows());
  op.n_dist = static_cast<int>(B.cols());
  op.f = [A](const Vec& x, double) -> Vec { return A * x; };
  op.df_dx = [A](const Vec&, double) -> Mat { return A; };
  op.y = [C](const Vec& x, double) -> Vec { return C * x; };
  op.dy_dx = [C](const Vec&, double) -> Mat { return C; };
  op.B = B;
  op.measurement_weight = measurement_weight;
  op.disturbance_weight = disturbance_weight;
  op.Pi0 = Pi0;
  op.x_hat0 = x_hat0;
  return op;
}

Hamiltonian observer_hamiltonian(const ObserverProblem& op, const Vec& y_m) {
  const Mat q_inv = checked_inverse(op.disturbance_weight, ErrorCode::BadParams, "disturbance weight");
  const Mat spread = op.B * q_inv * op.B.transpose();
  const Mat R = op.measurement_weight;
  Hamiltonian ham;
  ham.dim = op.n_state;
  ham.h = [op, y_m, spread, R](const Vec& p, const Vec& x, double t) {
    const Vec e = y_m - op.y(x, t);
    return -0.5 * e.dot(R * e) + 0.5 * p.dot(spread * p) + p.dot(op.f(x, t));
  };
  ham.dh_dx = [op, y_m, R](const Vec& p, const Vec& x, double t) -> Vec {
    return op.dy_dx(x, t).transpose() * (R * (y_m - op.y(x, t))) + op.df_dx(x, t).transpose() * p;
  };
  ham.dh_dp = [op, spread](const Vec& p, const Vec& x, double t) -> Vec { return op.f(x, t) + spread * p; };
  // Gauss-Newton curvature: second derivatives of y and of p·f are dropped (exact for linear maps, and p = 0 on
  // the estimate).
  ham.d2h_dx2 = [op, R](const Vec&, const Vec& x, double t) -> Mat {
    const Mat C = op.dy_dx(x, t);
    return -C.transpose() * R * C;
  };
  ham.d2h_dxdp = [op](const Vec&, const Vec& x, double t) -> Mat { return op.df_dx(x, t).transpose(); };
  ham.d2h_dp2 = [spread](const Vec&, const Vec&, double) -> Mat { return spread; };
  return ham;
}

Estimate observer_step(const ObserverProblem& op, const Estimate& est, const Vec& y_m, double dt) {
  const Hamiltonian ham = observer_hamiltonian(op, y_m);
  const Vec zero = Vec::Zero(op.n_state);
  struct D {
    Vec x;
    Mat Pi;
  };
  auto rhs = [&](const Vec& x, const Mat& Pi, double t) -> D {
    Eigen::LLT<Mat> llt(symmetric_part(Pi));
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::SingularInformation, "information matrix lost definiteness at t = " + fmt_num(t));
    const Mat hxx = ham.d2h_dx2(zero, x, t);
    const Mat hxp = ham.d2h_dxdp(zero, x, t);
    const Mat hpp = ham.d2h_dp2(zero, x, t);
    return {ham.dh_dp(zero, x, t) + llt.solve(ham.dh_dx(zero, x, t)),
            -hxx - hxp * Pi - Pi * hxp.transpose() - Pi * hpp * Pi};
  };
  const double t = est.t;
  const D k1 = rhs(est.x_hat, est.Pi, t);
  const D k2 = rhs(est.x_hat + 0.5 * dt * k1.x, est.Pi + 0.5 * dt * k1.Pi, t + 0.5 * dt);
  const D k3 = rhs(est.x_hat + 0.5 * dt * k2.x, est.Pi + 0.5 * dt * k2.Pi, t + 0.5 * dt);
  const D k4 = rhs(est.x_hat + dt * k3.x, est.Pi + dt * k3.Pi, t + dt);
  Estimate out;
  out.x_hat = est.x_hat + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  out.Pi = symmetric_part(est.Pi + dt / 6.0 * (k1.Pi + 2.0 * k2.Pi + 2.0 * k3.Pi + k4.Pi));
  out.t = t + dt;
  if (!all_finite(out.x_hat) || !all_finite(out.Pi))
    throw Error(ErrorCode::NonFiniteState, "estimate diverged at t = " + fmt_num(out.t));
  if (Eigen::LLT<Mat>(out.Pi).info() != Eigen::Success)
    throw Error(ErrorCode::SingularInformation, "information matrix lost definiteness at t = " + fmt_num(out.t));
  return out;
}

Vec MeasurementStream::at(double time) const {
  if (t.empty()) throw Error(ErrorCode::EmptySampleSet, "measurement stream is empty");
  auto it = std::upper_bound(t.begin(), t.end(), time + 1e-12);
  const std::size_t k = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
  return y[k];
}

MeasurementStream MeasurementStream::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  MeasurementStream s;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "empty measurement CSV " + path);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::IoError, path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (values.size() < 2) throw Error(ErrorCode::IoError, path + ":" + std::to_string(line_no) + ": need t and y");
    if (!s.t.empty() && values[0] <= s.t.back())
      throw Error(ErrorCode::IoError, path + ": times must increase");
    s.t.push_back(values[0]);
    s.y.push_back(Eigen::Map<Vec>(values.data() + 1, static_cast<Eigen::Index>(values.size() - 1)));
  }
  if (s.t.empty()) throw Error(ErrorCode::EmptySampleSet, "no measurements in " + path);
  return s;
}

void MeasurementStream::write_csv(const std::string& path) const {
  auto out = open_output(path);
  out << "t";
  const Eigen::Index m = y.empty() ? 0 : y.front().size();
  for (Eigen::Index i = 0; i < m; ++i) out << ",y" << i;
  out << "\n";
  for (std::size_t k = 0; k < t.size(); ++k) {
    out << fmt_num(t[k]);
    for (Eigen::Index i = 0; i < m; ++i) out << "," << fmt_num(y[k](i));
    out << "\n";
  }
}

ObserverRun run_observer(const ObserverProblem& op, const MeasurementStream& ym, double t0, double t1, double dt) {
  if (!(dt > 0.0) || !(t1 >= t0)) throw Error(ErrorCode::BadParams, "need dt > 0 and t1 ≥ t0");
  if (Eigen::LLT<Mat>(op.Pi0).info() != Eigen::Success)
    throw Error(ErrorCode::SingularInformation, "initial information matrix is not positive definite");
  ObserverRun run;
  Estimate est{op.x_hat0, symmetric_part(op.Pi0), t0};
  auto record = [&](const Estimate& e) {
    run.estimates.push_back(e);
    const Mat C = op.dy_dx(e.x_hat, e.t);
    run.gain.push_back(e.Pi.llt().solve(C.transpose() * op.measurement_weight));
  };
  record(est);
  const auto steps = static_cast<long>(std::ceil((t1 - t0) / dt - 1e-9));
  for (long k = 0; k < steps; ++k) {
    const double h = std::min(dt, t1 - est.t);
    est = observer_step(op, est, ym.at(est.t), h);
    record(est);
  }
  return run;
}

void ObserverRun::write_csv(const std::string& path) const {
  auto out = open_output(path);
  const Eigen::Index n = estimates.empty() ? 0 : estimates.front().x_hat.size();
  const Eigen::Index m = gain.empty() ? 0 : gain.front().cols();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",xhat" << i;
  for (Eigen::Index i = 0; i < n; ++i) out << ",Pi" << i << i;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) out << ",gain" << i << j;
  out << "\n";
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    out << fmt_num(estimates[k].t);
    for (Eigen::Index i = 0; i < n; ++i) out << "," << fmt_num(estimates[k].x_hat(i));
    for (Eigen::Index i = 0; i < n; ++i) out << "," << fmt_num(estimates[k].Pi(i, i));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) out << "," << fmt_num(gain[k](i, j));
    out << "\n";
  }
}

LqOracle lq_oracle(const TimeMatFn& A, const Mat& B, const Mat& Q_cost, const Mat& R_cost, const Mat& P_f,
                   double horizon, double dt) {
  if (!(dt > 0.0) || !(horizon > 0.0)) throw Error(ErrorCode::BadParams, "need dt > 0 and horizon > 0");
  const Mat r_inv = R_cost.inverse();
  const Mat S = B * r_inv * B.transpose();
  // Ṗ in forward time.
  auto pdot = [&](const Mat& P, double t) -> Mat {
    const Mat a = A(t);
    return -(a.transpose() * P + P * a - P * S * P + Q_cost);
  };
  const auto steps = static_cast<int>(std::ceil(horizon / dt - 1e-9));
  const double h = -horizon / steps;
  LqOracle o;
  Mat P = P_f;
  double t = horizon;
  for (int k = 0;; ++k) {
    o.t.push_back(t);
    o.P.push_back(P);
    o.K.push_back(r_inv * B.transpose() * P);
    if (k == steps) break;
    const Mat k1 = pdot(P, t);
    const Mat k2 = pdot(P + 0.5 * h * k1, t + 0.5 * h);
    const Mat k3 = pdot(P + 0.5 * h * k2, t + 0.5 * h);
    const Mat k4 = pdot(P + h * k3, t + h);
    P = symmetric_part(P + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    t = horizon + (k + 1) * h;
  }
  return o;
}

LqOracle lq_oracle(const Mat& A, const Mat& B, const Mat& Q_cost, const Mat& R_cost, const Mat& P_f, double horizon,
                   double dt) {
  return lq_oracle([A](double) { return A; }, B, Q_cost, R_cost, P_f, horizon, dt);
}

KalmanRun kalman_bucy_oracle(const Mat& A, const Mat& B, const Mat& C, const Mat& measurement_weight,
                             const Mat& disturbance_weight, const Mat& P0, const Vec& x_hat0,
                             const MeasurementStream& ym, double t0, double t1, double dt) {
  const Mat spread = B * disturbance_weight.inverse() * B.transpose();
  const Mat& R = measurement_weight;
  struct D {
    Vec x;
    Mat P;
  };
  auto rhs = [&](const Vec& x, const Mat& P, const Vec& y) -> D {
    return {A * x + P * C.transpose() * R * (y - C * x),
            A * P + P * A.transpose() + spread - P * C.transpose() * R * C * P};
  };
  KalmanRun run;
  Vec x = x_hat0;
  Mat P = P0;
  double t = t0;
  run.t.push_back(t);
  run.x_hat.push_back(x);
  run.P.push_back(P);
  const auto steps = static_cast<long>(std::ceil((t1 - t0) / dt - 1e-9));
  for (long k = 0; k < steps; ++k) {
    const double h = std::min(dt, t1 - t);
    const Vec y = ym.at(t);
    const D k1 = rhs(x, P, y);
    const D k2 = rhs(x + 0.5 * h * k1.x, P + 0.5 * h * k1.P, y);
    const D k3 = rhs(x + 0.5 * h * k2.x, P + 0.5 * h * k2.P, y);
    const D k4 = rhs(x + h * k3.x, P + h * k3.P, y);
    x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    P = symmetric_part(P + h / 6.0 * (k1.P + 2.0 * k2.P + 2.0 * k3.P + k4.P));
    t += h;
    run.t.push_back(t);
    run.x_hat.push_back(x);
    run.P.push_back(P);
  }
  return run;
}

void KalmanRun::write_csv(const std::string& path, const Mat& C, const Mat& measurement_weight) const {
  ObserverRun as_observer;
  for (std::size_t k = 0; k < t.size(); ++k) {
    as_observer.estimates.push_back({x_hat[k], P[k].inverse(), t[k]});
    as_observer.gain.push_back(P[k] * C.transpose() * measurement_weight);
  }
  as_observer.write_csv(path);
}

}  // namespace contraction
