#include <doctest.h>

#include <cmath>

#include "../lie_battery.hpp"
#include "contraction/error.hpp"
#include "contraction/hamilton.hpp"

using namespace contraction;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

Hamiltonian free_particle() {
  Hamiltonian h;
  h.h = [](const Vec& p, const Vec&, double) { return 0.5 * p.squaredNorm(); };
  h.dh_dx = [](const Vec& p, const Vec&, double) { return Vec::Zero(p.size()).eval(); };
  h.dh_dp = [](const Vec& p, const Vec&, double) { return p; };
  h.d2h_dx2 = [](const Vec& p, const Vec&, double) { return Mat::Zero(p.size(), p.size()).eval(); };
  h.d2h_dxdp = h.d2h_dx2;
  h.d2h_dp2 = [](const Vec& p, const Vec&, double) { return Mat::Identity(p.size(), p.size()).eval(); };
  return h;
}

// h = ½x² − ½p²: backward Riccati dH/dτ = 1 − H², so H = tanh(τ) from H = 0.
Hamiltonian scalar_regulator() {
  Hamiltonian h;
  h.h = [](const Vec& p, const Vec& x, double) { return 0.5 * x(0) * x(0) - 0.5 * p(0) * p(0); };
  h.dh_dx = [](const Vec&, const Vec& x, double) { return x; };
  h.dh_dp = [](const Vec& p, const Vec&, double) { return Vec(-p); };
  h.d2h_dx2 = [](const Vec&, const Vec&, double) { return Mat::Ones(1, 1).eval(); };
  h.d2h_dxdp = [](const Vec&, const Vec&, double) { return Mat::Zero(1, 1).eval(); };
  h.d2h_dp2 = [](const Vec&, const Vec&, double) { return Mat(-Mat::Ones(1, 1)); };
  return h;
}

}  // namespace

TEST_CASE("free particle Hessian follows 1/(1+t)") {
  const auto tr = integrate_characteristic(free_particle(), {v1(0.0), v1(1.0), Mat::Ones(1, 1), 0.0}, 0.01, 300,
                                           Direction::Forward);
  double err = 0.0;
  for (const auto& s : tr) err = std::max(err, std::abs(s.H(0, 0) - 1.0 / (1.0 + s.t)));
  CHECK(err < 1e-8);
  CHECK(tr.back().t == doctest::Approx(3.0));
  CHECK(tr.back().x(0) == doctest::Approx(3.0));  // ẋ = p = 1
}

TEST_CASE("inverse Riccati step tracks the inverse Hessian") {
  InverseCharState s = invert({v1(0.0), v1(1.0), Mat::Ones(1, 1), 0.0});
  for (int k = 0; k < 100; ++k) s = inverse_riccati_step(free_particle(), s, 0.02, Direction::Forward);
  CHECK(s.H_inv(0, 0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(invert({v1(0.0), v1(0.0), Mat::Zero(1, 1), 0.0}), Error);
}

TEST_CASE("backward scalar Riccati matches tanh") {
  const auto tr = integrate_characteristic(scalar_regulator(), {v1(0.0), v1(0.0), Mat::Zero(1, 1), 2.0}, 0.01, 200,
                                           Direction::Backward);
  CHECK(tr.back().t == doctest::Approx(0.0));
  for (const auto& s : tr) CHECK(s.H(0, 0) == doctest::Approx(std::tanh(2.0 - s.t)).epsilon(1e-9));
}

TEST_CASE("convexity monitor") {
  const auto ok = convexity_monitor(free_particle(), {v1(0.0), v1(1.0), Mat::Ones(1, 1), 0.0}, 2.0, 0.01,
                                    Direction::Forward);
  CHECK_FALSE(ok.lost_at);
  CHECK(ok.min_eig.back() == doctest::Approx(1.0 / 3.0));
  // backward in time the free particle's Hessian blows up and turns negative
  const auto lost = convexity_monitor(free_particle(), {v1(0.0), v1(1.0), Mat::Ones(1, 1), 0.0}, 1.5, 0.01,
                                      Direction::Backward);
  REQUIRE(lost.lost_at.has_value());
  CHECK(*lost.lost_at == doctest::Approx(-1.0).epsilon(0.05));
}

TEST_CASE("derivative checks") {
  Hamiltonian h = scalar_regulator();
  CHECK_NOTHROW(validate_hamiltonian(h, v1(0.3), v1(-0.2), 0.0));
  h.dh_dp = [](const Vec& p, const Vec&, double) { return p; };
  CHECK(check_hamiltonian(h, v1(0.3), v1(-0.2), 0.0).first_derivative_residual > 0.1);
  CHECK_THROWS_AS(validate_hamiltonian(h, v1(0.3), v1(-0.2), 0.0), Error);

  Hamiltonian partial = scalar_regulator();
  partial.d2h_dx2 = nullptr;
  partial.d2h_dp2 = nullptr;
  const Hamiltonian filled = with_finite_difference_hessians(partial);
  CHECK(filled.d2h_dx2(v1(0.1), v1(0.2), 0.0)(0, 0) == doctest::Approx(1.0));
  CHECK(filled.d2h_dp2(v1(0.1), v1(0.2), 0.0)(0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("nested positivity order") {
  Mat e1 = Mat::Zero(2, 2), e2 = Mat::Zero(2, 2);
  e1(0, 0) = 1.0;
  e2(1, 1) = 1.0;
  CHECK(nested_positivity_order({Mat::Identity(2, 2)}) == 1);
  CHECK(nested_positivity_order({e1, e2}) == 2);
  CHECK(nested_positivity_order({e1, Mat::Zero(2, 2), e2}) == 3);
  CHECK_FALSE(nested_positivity_order({e1, Mat(-e2)}).has_value());
  CHECK_FALSE(nested_positivity_order({Mat::Zero(2, 2)}).has_value());
}

TEST_CASE("Lie chains reproduce the Kalman-rank order") {
  for (const auto& c : lie_battery::cases()) {
    CAPTURE(c.name);
    for (int j_max = 1; j_max <= 3; ++j_max) CHECK(lie_battery::chain_order(c, j_max) == lie_battery::oracle(c, j_max));
  }
}

TEST_CASE("Lie chain needs enough samples") {
  const auto c = lie_battery::cases()[1];
  const Hamiltonian h = lie_battery::hamiltonian(c);
  const auto tr = integrate_characteristic(h, {Vec::Ones(2), Vec::Zero(2), Mat::Identity(2, 2), 1.0}, 0.01, 2,
                                           Direction::Backward);
  CHECK_THROWS_AS(lie_condition_p(h, tr, 3, Direction::Backward), Error);
  CHECK_THROWS_AS(lie_condition_p(h, tr, 4, Direction::Backward), Error);
}
