#include <doctest.h>

#include <cmath>
#include <numbers>

#include "contraction/error.hpp"
#include "contraction/galerkin.hpp"

using namespace contraction;

namespace {

constexpr double kPi = std::numbers::pi;
Vec v1(double a) { return Vec::Constant(1, a); }

struct Heat {
  Grid grid = Grid::line(kPi, 101);
  PdeProblem problem;
  BoundarySpec bounds;
  Heat() {
    problem.set_linear_diffusion(v1(1.0));
    bounds = BoundarySpec::uniform(grid, BoundaryKind::Dirichlet, [](const Vec&, double) { return v1(0.0); });
  }
};

}  // namespace

TEST_CASE("sine modes are orthogonal under the trapezoidal rule") {
  Heat h;
  const BasisSet b(h.grid, 1, sine_modes(h.grid, 1, 4));
  const Mat M = mass_matrix(b);
  CHECK((M - kPi / 2.0 * Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("heat modes decay at k squared") {
  Heat h;
  BasisSet b(h.grid, 1, sine_modes(h.grid, 1, 3));
  for (int k = 0; k < 3; ++k) {
    const Vec a = Vec::Unit(3, k);
    const Vec adot = project_dynamics(h.problem, b, h.bounds, a, 0.0);
    CHECK(adot(k) == doctest::Approx(-(k + 1.0) * (k + 1.0)).epsilon(1e-9));
    CHECK(adot.norm() == doctest::Approx((k + 1.0) * (k + 1.0)).epsilon(1e-9));
  }
  b.set_coefficients((Vec(3) << 1.0, 0.5, 0.0).finished());
  const auto tr = galerkin_run(h.problem, b, h.bounds, 0.0, 1.0, 1e-3);
  CHECK(tr.a.back()(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(tr.a.back()(1) == doctest::Approx(0.5 * std::exp(-4.0)).epsilon(1e-8));
}

TEST_CASE("projection, reconstruction and basis edits") {
  Heat h;
  BasisSet b(h.grid, 1, sine_modes(h.grid, 1, 3));
  const Field f = Field::sample(h.grid, 1, [](const Vec& x) { return v1(2.0 * std::sin(x(0)) - std::sin(3.0 * x(0))); });
  const Vec a = project_field(b, f);
  CHECK(a(0) == doctest::Approx(2.0));
  CHECK(std::abs(a(1)) < 1e-12);
  CHECK(a(2) == doctest::Approx(-1.0));
  b.set_coefficients(a);
  CHECK((reconstruct(b).values - f.values).cwiseAbs().maxCoeff() < 1e-12);

  const Removal r = remove_basis(b, 2);
  CHECK(r.basis.size() == 2);
  CHECK(r.disturbance == doctest::Approx(std::sqrt(kPi / 2.0)));

  const BasisSet grown = add_basis(r.basis, sine_mode(h.grid, 1, 0, 5));
  CHECK(grown.size() == 3);
  CHECK(grown.coefficients()(2) == 0.0);
}

TEST_CASE("degenerate and boundary-violating bases") {
  Heat h;
  const auto w = sine_mode(h.grid, 1, 0, 1);
  CHECK_THROWS_AS(mass_matrix(BasisSet(h.grid, 1, {w, w})), Error);
  const BasisSet bump(h.grid, 1, {gaussian_bump(1, 0, v1(0.2), 0.5)});
  CHECK_THROWS_AS(check_basis_boundary(bump, h.bounds), Error);
  CHECK_NOTHROW(check_basis_boundary(BasisSet(h.grid, 1, sine_modes(h.grid, 1, 2)), h.bounds));
}

TEST_CASE("Galerkin distance is non-increasing for heat") {
  Heat h;
  const BasisSet b(h.grid, 1, sine_modes(h.grid, 1, 4));
  const Vec a1 = (Vec(4) << 1.0, -0.3, 0.2, 0.1).finished();
  const auto s = galerkin_perturbation(h.problem, b, h.bounds, a1, Vec::Zero(4), 0.0, 1.0, 1e-3);
  for (std::size_t k = 1; k < s.d2.size(); ++k) CHECK(s.d2[k] <= s.d2[k - 1]);
  CHECK(fit_rate(s, 0.3, 1.0).rate == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("2-D sine modes vanish on all faces") {
  const Grid g = Grid::rect(2.0, 1.0, 11, 9);
  const auto modes = sine_modes(g, 1, 4);
  REQUIRE(modes.size() == 4);
  const BasisSet b(g, 1, modes);
  const auto bounds = BoundarySpec::uniform(g, BoundaryKind::Dirichlet, [](const Vec&, double) { return v1(0.0); });
  CHECK_NOTHROW(check_basis_boundary(b, bounds));
  CHECK(mass_matrix(b)(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
}
