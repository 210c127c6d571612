#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "contraction/dynamics.hpp"

using namespace contraction;

namespace {

constexpr double kPi = std::numbers::pi;
Vec v1(double a) { return Vec::Constant(1, a); }

PdeProblem heat(double g) {
  PdeProblem p;
  p.set_linear_diffusion(v1(g));
  return p;
}

BoundarySpec zero_dirichlet(const Grid& g) {
  return BoundarySpec::uniform(g, BoundaryKind::Dirichlet, [](const Vec&, double) { return v1(0.0); });
}

PdeProblem advection(double v) {
  PdeProblem p;
  p.h = [v](const Vec&, const Mat& g, const Vec&, double) { return v1(v * g(0, 0)); };
  p.dh_dPhi = [](const Vec&, const Mat&, const Vec&, double) { return Mat::Zero(1, 1).eval(); };
  p.dh_dGrad = [v](const Vec&, const Mat&, const Vec&, double) { return Mat::Constant(1, 1, v); };
  return p;
}

}  // namespace

TEST_CASE("heat mode decays like exp(-t)") {
  const Grid g = Grid::line(kPi, 51);
  const Discretization d(heat(1.0), g, zero_dirichlet(g));
  const Field init = Field::sample(g, 1, [](const Vec& x) { return v1(std::sin(x(0))); });
  const auto tr = run(d, init, 0.0, 0.5, 0.99 * d.stable_dt(init, 0.0));
  CHECK(tr.times.back() == doctest::Approx(0.5).epsilon(1e-14));
  double err = 0.0;
  for (int k = 0; k < g.size(); ++k)
    err = std::max(err, std::abs(tr.snapshots.back()(0, k) - std::exp(-0.5) * std::sin(g.coords(k)(0))));
  // second-order space error of the mode: (h²/12)·t·e^{−t}
  CHECK(err < 1e-4);
}

TEST_CASE("advected bump follows its characteristic with first-order smearing") {
  auto bump = [](double x) { return std::exp(-40.0 * (x - 0.5) * (x - 0.5)); };
  auto error_at = [&](int nodes, double& peak_at) {
    const Grid g = Grid::line(2.0, nodes);
    BoundarySpec b;
    b.set(Face::XLow, {BoundaryKind::InflowGiven, [](const Vec&, double) { return v1(0.0); }});
    const Discretization d(advection(1.0), g, b);
    const Field init = Field::sample(g, 1, [&](const Vec& x) { return v1(bump(x(0))); });
    const auto tr = run(d, init, 0.0, 0.5, 0.99 * d.stable_dt(init, 0.0));
    double err = 0.0, peak = 0.0;
    for (int k = 0; k < g.size(); ++k) {
      const double x = g.coords(k)(0), val = tr.snapshots.back()(0, k);
      err = std::max(err, std::abs(val - bump(x - 0.5)));
      if (val > peak) peak = val, peak_at = x;
    }
    return err;
  };
  double peak_coarse = 0.0, peak_fine = 0.0;
  const double coarse = error_at(401, peak_coarse), fine = error_at(801, peak_fine);
  CHECK(peak_fine == doctest::Approx(1.0).epsilon(0.01));
  // halving Δx roughly halves the error
  CHECK(coarse / fine == doctest::Approx(2.0).epsilon(0.25));
  CHECK(fine < 0.05);
}

TEST_CASE("step guards") {
  const Grid g = Grid::line(kPi, 51);
  const Discretization d(heat(1.0), g, zero_dirichlet(g));
  const Field f(1, g.size());
  CHECK_THROWS_AS(step(d, f, 0.0, 1.0), Error);
  CHECK_NOTHROW(step(d, f, 0.0, 1.0, false));
  Field bad = f;
  bad(0, 10) = std::nan("");
  CHECK_THROWS_AS(step(d, bad, 0.0, 1e-4), Error);
  try {
    (void)step(d, f, 0.0, 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CflViolation);
  }
}

TEST_CASE("rate fit recovers an exact exponential") {
  DecaySeries s;
  for (int k = 0; k <= 100; ++k) {
    s.times.push_back(0.01 * k);
    s.d2.push_back(3.0 * std::exp(-2.0 * 0.7 * s.times.back()));
  }
  const RateFit f = fit_rate(s, 0.2, 0.9);
  CHECK(f.rate == doctest::Approx(0.7));
  CHECK(f.r_squared == doctest::Approx(1.0));

  DecaySeries zero = s;
  for (double& v : zero.d2) v = 0.0;
  CHECK_THROWS_AS(fit_rate(zero, 0.2, 0.9), Error);
  CHECK_THROWS_AS(fit_rate(s, 0.5, 0.51), Error);
}

TEST_CASE("perturbation experiment in a metric") {
  const Grid g = Grid::line(kPi, 41);
  PdeProblem p;
  p.n_state = 2;
  p.set_linear_diffusion(Vec::Ones(2));
  const BoundarySpec b = BoundarySpec::uniform(g, BoundaryKind::Dirichlet, [](const Vec&, double) { return Vec::Zero(2).eval(); });
  const Discretization d(p, g, b);
  const Field a = Field::sample(g, 2, [](const Vec& x) { return Vec::Constant(2, std::sin(x(0))); });
  const Field z(2, g.size());
  Mat M = Mat::Identity(2, 2);
  M(1, 1) = 4.0;
  const auto plain = perturbation_experiment(d, a, z, 0.0, 0.2, 1e-3);
  const auto weighted = perturbation_experiment(d, a, z, 0.0, 0.2, 1e-3, M);
  CHECK(weighted.d2.front() == doctest::Approx(2.5 * plain.d2.front()));
  for (std::size_t k = 1; k < plain.d2.size(); ++k) CHECK(plain.d2[k] <= plain.d2[k - 1]);
}

TEST_CASE("csv outputs") {
  const Grid g = Grid::line(1.0, 3);
  Trajectory tr;
  tr.times = {0.0, 0.5};
  tr.snapshots = {Field(1, 3), Field(1, 3)};
  const auto dir = std::filesystem::temp_directory_path() / "contraction_dyn_test";
  std::filesystem::create_directories(dir);
  tr.write_csv((dir / "tr.csv").string(), g);
  std::ifstream in(dir / "tr.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("t,node", 0) == 0);
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 6);
}
