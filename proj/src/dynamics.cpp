#include "contraction/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "contraction/io.hpp"

namespace contraction {

Field step(const Discretization& disc, const Field& state, double t, double dt, bool check_cfl) {
  if (!(dt > 0.0)) throw Error(ErrorCode::BadParams, "time step must be positive");
  if (check_cfl) {
    const double limit = disc.stable_dt(state, t);
    if (dt > limit * (1.0 + 1e-12))
      throw Error(ErrorCode::CflViolation, "dt = " + fmt_num(dt) + " exceeds stability limit " + fmt_num(limit));
  }
  auto stage = [&](const Field& base, const Field& slope, double w, double ts) {
    Field s(base.values + w * slope.values);
    disc.impose(s, ts);
    return s;
  };
  Field s0 = state;
  disc.impose(s0, t);
  const Field k1 = disc.rhs(s0, t);
  const Field k2 = disc.rhs(stage(s0, k1, 0.5 * dt, t + 0.5 * dt), t + 0.5 * dt);
  const Field k3 = disc.rhs(stage(s0, k2, 0.5 * dt, t + 0.5 * dt), t + 0.5 * dt);
  const Field k4 = disc.rhs(stage(s0, k3, dt, t + dt), t + dt);
  Field next(s0.values + dt / 6.0 * (k1.values + 2.0 * k2.values + 2.0 * k3.values + k4.values));
  disc.impose(next, t + dt);
  if (!all_finite(next.values)) throw Error(ErrorCode::NonFiniteState, "non-finite state at t = " + fmt_num(t + dt));
  return next;
}

Field step(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds, const Field& state, double t,
           double dt) {
  return step(Discretization(problem, grid, bounds), state, t, dt);
}

namespace {

// Shared driver: calls `visit(t, state)` at t0 and at every snapshot.
template <class Visit>
void integrate(const Discretization& disc, Field state, double t0, double t1, double dt, const RunOptions& options,
               Visit&& visit) {
  if (!(t1 >= t0)) throw Error(ErrorCode::BadParams, "t1 must not precede t0");
  if (!(dt > 0.0)) throw Error(ErrorCode::BadParams, "time step must be positive");
  const int every = std::max(1, options.snapshot_every);
  disc.impose(state, t0);
  visit(t0, state);
  const auto steps = static_cast<long>(std::ceil((t1 - t0) / dt - 1e-9));
  double t = t0;
  for (long s = 1; s <= steps; ++s) {
    const double target = s == steps ? t1 : t0 + s * dt;
    state = step(disc, state, t, target - t, options.check_cfl);
    t = target;
    if (s % every == 0 || s == steps) visit(t, state);
  }
}

}  // namespace

Trajectory run(const Discretization& disc, const Field& init, double t0, double t1, double dt,
               const RunOptions& options) {
  require_shape(init, disc.grid(), disc.problem().n_state);
  Trajectory traj;
  integrate(disc, init, t0, t1, dt, options, [&](double t, const Field& s) {
    traj.times.push_back(t);
    traj.snapshots.push_back(s);
  });
  return traj;
}

Trajectory run(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds, const Field& init,
               double t0, double t1, double dt, const RunOptions& options) {
  return run(Discretization(problem, grid, bounds), init, t0, t1, dt, options);
}

DecaySeries perturbation_experiment(const Discretization& disc, const Field& init_a, const Field& init_b, double t0,
                                    double t1, double dt, const Mat& metric, const RunOptions& options) {
  const Trajectory a = run(disc, init_a, t0, t1, dt, options);
  const Trajectory b = run(disc, init_b, t0, t1, dt, options);
  DecaySeries series;
  series.times = a.times;
  for (std::size_t k = 0; k < a.times.size(); ++k)
    series.d2.push_back(
        integrate_squared(Field(a.snapshots[k].values - b.snapshots[k].values), disc.grid(), metric));
  return series;
}

DecaySeries perturbation_experiment(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds,
                                    const Field& init_a, const Field& init_b, double t0, double t1, double dt) {
  return perturbation_experiment(Discretization(problem, grid, bounds), init_a, init_b, t0, t1, dt);
}

RateFit fit_rate(const DecaySeries& series, double t_lo, double t_hi) {
  std::vector<double> ts, ys;
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    const double t = series.times[k];
    if (t < t_lo - 1e-12 || t > t_hi + 1e-12) continue;
    if (!(series.d2[k] > 0.0))
      throw Error(ErrorCode::DegenerateSeries, "squared distance vanishes at t = " + fmt_num(t));
    ts.push_back(t);
    ys.push_back(0.5 * std::log(series.d2[k]));
  }
  if (ts.size() < 3 || ts.back() - ts.front() <= 0.0)
    throw Error(ErrorCode::DegenerateSeries, "fit window holds fewer than 3 samples");
  const double n = static_cast<double>(ts.size());
  double mt = 0, my = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) mt += ts[k], my += ys[k];
  mt /= n;
  my /= n;
  double stt = 0, sty = 0, syy = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    stt += (ts[k] - mt) * (ts[k] - mt);
    sty += (ts[k] - mt) * (ys[k] - my);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  RateFit fit;
  const double slope = sty / stt;
  fit.rate = -slope;
  fit.intercept = my - slope * mt;
  fit.r_squared = syy <= 1e-300 ? 1.0 : (sty * sty) / (stt * syy);
  return fit;
}

void DecaySeries::write_csv(const std::string& path) const {
  auto out = open_output(path);
  out << "t,d2\n";
  for (std::size_t k = 0; k < times.size(); ++k) out << fmt_num(times[k]) << "," << fmt_num(d2[k]) << "\n";
}

void Trajectory::write_csv(const std::string& path, const Grid& grid) const {
  auto out = open_output(path);
  out << "t,node";
  const char* axes[] = {"x", "y"};
  for (int a = 0; a < grid.dims(); ++a) out << "," << axes[a];
  const int n = snapshots.empty() ? 0 : snapshots.front().n_state();
  for (int i = 0; i < n; ++i) out << ",phi" << i;
  out << "\n";
  for (std::size_t s = 0; s < times.size(); ++s)
    for (int k = 0; k < grid.size(); ++k) {
      out << fmt_num(times[s]) << "," << k;
      const Vec x = grid.coords(k);
      for (int a = 0; a < grid.dims(); ++a) out << "," << fmt_num(x(a));
      for (int i = 0; i < n; ++i) out << "," << fmt_num(snapshots[s](i, k));
      out << "\n";
    }
}

void write_decay_svg(const std::string& path, const DecaySeries& series, const RateFit& fit, double t_lo,
                     double t_hi, const std::string& title) {
  PlotSeries points{"0.5 log d2", series.times, {}, true, "#1f77b4"};
  for (double v : series.d2) points.y.push_back(v > 0.0 ? 0.5 * std::log(v) : std::nan(""));
  PlotSeries line{"fit: rate " + fmt_num(fit.rate), {t_lo, t_hi},
                  {fit.intercept - fit.rate * t_lo, fit.intercept - fit.rate * t_hi}, false, "#d62728"};
  write_svg_plot(path, title, "t", "0.5 log d2", {points, line});
}

}  // namespace contraction
