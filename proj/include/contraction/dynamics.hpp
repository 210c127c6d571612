#pragma once

#include <string>
#include <vector>

#include "contraction/operators.hpp"

namespace contraction {

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> snapshots;

  // Long format: t, node, coordinates, one column per component.
  void write_csv(const std::string& path, const Grid& grid) const;
};

// Squared distance ∫δΦᵀMδΦ dV between two solutions over time.
struct DecaySeries {
  std::vector<double> times;
  std::vector<double> d2;

  void write_csv(const std::string& path) const;
};

struct RateFit {
  double rate = 0.0;
  double r_squared = 0.0;
  double intercept = 0.0;  // of ½·log d2
};

struct RunOptions {
  int snapshot_every = 1;
  // Reject steps above the explicit stability limit.
  bool check_cfl = true;
};

// One classical RK4 step. Prescribed nodes are reset at every stage time.
Field step(const Discretization& disc, const Field& state, double t, double dt, bool check_cfl = true);
Field step(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds, const Field& state, double t,
           double dt);

// Integrates from t0 to t1. The last step is shortened to land on t1.
Trajectory run(const Discretization& disc, const Field& init, double t0, double t1, double dt,
               const RunOptions& options = {});
Trajectory run(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds, const Field& init,
               double t0, double t1, double dt, const RunOptions& options = {});

// `metric` weights the squared distance (identity when empty).
DecaySeries perturbation_experiment(const Discretization& disc, const Field& init_a, const Field& init_b, double t0,
                                    double t1, double dt, const Mat& metric = Mat(), const RunOptions& options = {});
DecaySeries perturbation_experiment(const PdeProblem& problem, const Grid& grid, const BoundarySpec& bounds,
                                    const Field& init_a, const Field& init_b, double t0, double t1, double dt);

// Least-squares slope of ½·log d2 over [t_lo, t_hi], negated.
RateFit fit_rate(const DecaySeries& series, double t_lo, double t_hi);

// log d2 points with the fitted line over the window.
void write_decay_svg(const std::string& path, const DecaySeries& series, const RateFit& fit, double t_lo,
                     double t_hi, const std::string& title);

}  // namespace contraction
