#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "contraction/linalg.hpp"
#include "contraction/operators.hpp"

using namespace contraction;

namespace {

constexpr double kPi = std::numbers::pi;
Vec v1(double a) { return Vec::Constant(1, a); }

// Transport of one scalar with a velocity field given per position.
PdeProblem transport(std::function<Vec(const Vec&)> vel, int m) {
  PdeProblem p;
  p.n_coord = m;
  p.h = [vel](const Vec&, const Mat& g, const Vec& x, double) { return Vec(g * vel(x)); };
  p.dh_dPhi = [](const Vec&, const Mat&, const Vec&, double) { return Mat::Zero(1, 1).eval(); };
  p.dh_dGrad = [vel](const Vec&, const Mat&, const Vec& x, double) { return Mat(vel(x).transpose()); };
  return p;
}

BoundarySpec all_inflow(const Grid& g) {
  return BoundarySpec::uniform(g, BoundaryKind::InflowGiven, [](const Vec&, double) { return v1(0.0); });
}

}  // namespace

TEST_CASE("upwind gradient is exact on linear fields for any velocity sign") {
  const Grid g = Grid::rect(1.0, 2.0, 9, 7);
  const Field f = Field::sample(g, 1, [](const Vec& x) { return v1(2.0 * x(0) - 3.0 * x(1) + 1.0); });
  Field vel(2, g.size());
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < g.size(); ++k) vel(0, k) = u(gen), vel(1, k) = u(gen);
  vel(0, 3) = 0.0;  // forward difference at zero velocity
  const Field gx = upwind_gradient(f, g, vel, 0), gy = upwind_gradient(f, g, vel, 1);
  CHECK((gx.values.array() - 2.0).abs().maxCoeff() < 1e-12);
  CHECK((gy.values.array() + 3.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("central gradients are exact on quadratics, including edges") {
  const Grid g = Grid::rect(1.0, 1.0, 6, 5);
  const Field f = Field::sample(g, 1, [](const Vec& x) { return v1(x(0) * x(0) + x(0) * x(1) - 2.0 * x(1) * x(1)); });
  const auto grads = central_gradients(f, g);
  for (int k = 0; k < g.size(); ++k) {
    const Vec x = g.coords(k);
    CHECK(grads[k](0, 0) == doctest::Approx(2.0 * x(0) + x(1)));
    CHECK(grads[k](0, 1) == doctest::Approx(x(0) - 4.0 * x(1)));
  }
}

TEST_CASE("convection matrix matches a hand-built upwind stencil with inflow rows deleted") {
  const Grid g = Grid::line(1.0, 4);
  const PdeProblem p = transport([](const Vec&) { return v1(1.0); }, 1);
  BoundarySpec b;
  b.set(Face::XLow, {BoundaryKind::InflowGiven, [](const Vec&, double) { return v1(0.0); }});
  const auto cm = assemble_convection_matrix(p, g, b, 0.0);
  REQUIRE(cm.reduced.size() == 1);
  const Mat C = Mat(cm.reduced[0]);
  Mat expected(3, 3);
  expected << 1, 0, 0, -1, 1, 0, 0, -1, 1;
  expected *= 3.0;
  CHECK((C - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(cm.free_nodes[0] == std::vector<int>{1, 2, 3});
}

TEST_CASE("upwind PSD bound on randomized velocity fields") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 40; ++trial) {
    const bool two_d = trial % 2 == 1;
    const int n = 16 + trial % 13;
    const Grid g = two_d ? Grid::rect(1.0, 1.3, n, n - 3) : Grid::line(2.0, 4 * n);
    const double a = u(gen), b = u(gen), c = u(gen), d = u(gen), e = 3.0 * u(gen);
    const PdeProblem p = transport(
        [=](const Vec& x) {
          Vec v(two_d ? 2 : 1);
          v(0) = a + b * x(0) + e * std::sin(3.0 * x(0) + (two_d ? x(1) : 0.0));
          if (two_d) v(1) = c + d * x(1) + e * std::cos(2.0 * x(0) - x(1));
          return v;
        },
        two_d ? 2 : 1);
    const auto r = upwind_psd_check(p, g, all_inflow(g), 0.0);
    CHECK(r.min_eig >= -kPsdTolerance);
    CHECK(r.is_psd);
  }
}

TEST_CASE("discrete Dirichlet Laplacian spectrum") {
  const Grid g = Grid::line(kPi, 201);
  PdeProblem p;
  p.set_linear_diffusion(v1(1.0));
  const BoundarySpec b = BoundarySpec::uniform(g, BoundaryKind::Dirichlet, [](const Vec&, double) { return v1(0.0); });
  const auto dm = diffusion_matrix(p, g, b, 0.0, Field(1, g.size()));
  CHECK(dm.free_index.size() == 199);
  const double h = g.spacing(0);
  const double exact = 4.0 / (h * h) * std::pow(std::sin(h / 2.0), 2);
  const SparseMat neg = -dm.matrix;
  CHECK(min_eigenvalue(neg) == doctest::Approx(exact).epsilon(1e-9));
  CHECK(std::abs(min_eigenvalue(neg) - 1.0) < 0.01);
}

TEST_CASE("heat right-hand side approximates the second derivative") {
  const Grid g = Grid::line(kPi, 101);
  PdeProblem p;
  p.set_linear_diffusion(v1(1.0));
  const BoundarySpec b = BoundarySpec::uniform(g, BoundaryKind::Dirichlet, [](const Vec&, double) { return v1(0.0); });
  const Discretization disc(p, g, b);
  const Field f = Field::sample(g, 1, [](const Vec& x) { return v1(std::sin(x(0))); });
  const Field r = disc.rhs(f, 0.0);
  CHECK(r(0, 0) == 0.0);
  CHECK(r(0, 100) == 0.0);
  CHECK((r.values + f.values).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("flux form conserves mass under zero Neumann data") {
  const Grid g = Grid::rect(1.0, 1.0, 12, 9);
  PdeProblem p;
  p.n_coord = 2;
  p.set_linear_diffusion(v1(0.7));
  BoundarySpec b;
  for (Face f : g.faces()) b.set(f, {BoundaryKind::Neumann, {}});
  const Discretization disc(p, g, b);
  const Field f = Field::sample(g, 1, [](const Vec& x) { return v1(std::exp(x(0)) * std::cos(2.0 * x(1))); });
  const Field r = disc.rhs(f, 0.0);
  CHECK(std::abs(r.values.row(0).dot(g.quadrature_weights())) < 1e-12);
}

TEST_CASE("stable step and missing inflow data") {
  const Grid g = Grid::line(1.0, 201);
  const PdeProblem p = transport([](const Vec& x) { return v1(-x(0)); }, 1);
  const Discretization disc(p, g, all_inflow(g));
  CHECK(disc.stable_dt(Field(1, g.size()), 0.0) == doctest::Approx(0.4 * g.spacing(0)));

  BoundarySpec left;
  left.set(Face::XLow, {BoundaryKind::InflowGiven, [](const Vec&, double) { return v1(0.0); }});
  const Discretization missing(p, g, left);  // inflow happens at x = 1
  CHECK_THROWS_AS((void)missing.rhs(Field(1, g.size()), 0.0), Error);
}

TEST_CASE("Dirichlet values are imposed") {
  const Grid g = Grid::line(1.0, 5);
  PdeProblem p;
  p.set_linear_diffusion(v1(1.0));
  BoundarySpec b;
  b.set(Face::XLow, {BoundaryKind::Dirichlet, [](const Vec&, double t) { return v1(1.0 + t); }});
  b.set(Face::XHigh, {BoundaryKind::Neumann, {}});
  const Discretization disc(p, g, b);
  Field f(1, g.size());
  disc.impose(f, 2.0);
  CHECK(f(0, 0) == 3.0);
  CHECK(f(0, 4) == 0.0);
}
