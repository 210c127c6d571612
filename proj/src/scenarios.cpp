#include "contraction/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "contraction/io.hpp"

namespace contraction {

using nlohmann::json;

double Uniform::next() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

void gauss_legendre(int points, Vec& nodes, Vec& weights) {
  if (points < 1) throw Error(ErrorCode::BadParams, "need at least one quadrature point");
  // Golub-Welsch: eigenvalues of the Jacobi matrix.
  Mat J = Mat::Zero(points, points);
  for (int k = 1; k < points; ++k) J(k, k - 1) = J(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  nodes = es.eigenvalues();
  weights = 2.0 * es.eigenvectors().row(0).transpose().array().square();
}

namespace {

constexpr double kPi = std::numbers::pi;

Vec vec1(double v) { return Vec::Constant(1, v); }

Vec to_vec(const json& j) {
  if (j.is_number()) return vec1(j.get<double>());
  std::vector<double> v = j.get<std::vector<double>>();
  return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Parameter table plus builder for each scenario.
struct Entry {
  std::string description;
  std::vector<ParamDoc> params;
  std::function<Scenario(const json&, std::uint64_t)> build;
};

class P {
 public:
  explicit P(const json& j) : j_(j) {}
  double num(const char* k) const { return j_.at(k).get<double>(); }
  int integer(const char* k) const { return j_.at(k).get<int>(); }
  std::string str(const char* k) const { return j_.at(k).get<std::string>(); }
  const json& raw(const char* k) const { return j_.at(k); }

 private:
  const json& j_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::BadParams, what);
}

BoundaryValueFn constant_value(Vec v) {
  return [v](const Vec&, double) { return v; };
}

Field zero_field(const Grid& g, int n) { return Field(n, g.size()); }

// ---------------------------------------------------------------------------
// Transport, both forms. v(x) = offset − slope·x.

Scenario build_transport(const json& j, std::uint64_t seed, bool conservative) {
  P p(j);
  const int nodes = p.integer("nodes");
  const double L = p.num("length"), slope = p.num("slope"), offset = p.num("offset");
  const int modes = p.integer("modes");
  const double smooth = p.num("smoothness");
  require(nodes >= 3, "nodes must be ≥ 3");
  require(L > 0, "length must be positive");
  require(modes >= 1, "modes must be ≥ 1");
  require(smooth >= 0, "smoothness must be ≥ 0");

  Scenario s;
  s.grid = Grid::line(L, nodes);
  PdeProblem& pr = s.problem;
  pr.name = conservative ? "transport_conserve" : "transport_compress";
  pr.n_state = 1;
  pr.n_coord = 1;
  auto v = [offset, slope](const Vec& x) { return offset - slope * x(0); };
  if (conservative) {
    // ∇·(φv) = v·∇φ + (∇·v)φ
    pr.h = [v, slope](const Vec& phi, const Mat& g, const Vec& x, double) { return vec1(v(x) * g(0, 0) - slope * phi(0)); };
    pr.dh_dPhi = [slope](const Vec&, const Mat&, const Vec&, double) { return Mat::Constant(1, 1, -slope); };
  } else {
    pr.h = [v](const Vec&, const Mat& g, const Vec& x, double) { return vec1(v(x) * g(0, 0)); };
    pr.dh_dPhi = [](const Vec&, const Mat&, const Vec&, double) { return Mat::Zero(1, 1).eval(); };
  }
  pr.dh_dGrad = [v](const Vec&, const Mat&, const Vec& x, double) { return Mat::Constant(1, 1, v(x)); };
  s.bounds.set(Face::XLow, {BoundaryKind::InflowGiven, constant_value(vec1(0.0))});
  s.bounds.set(Face::XHigh, {BoundaryKind::InflowGiven, constant_value(vec1(0.0))});

  Uniform rng(seed);
  for (int r = 0; r < 2; ++r) {
    std::vector<double> c(modes);
    // Fundamental of opposite sign in the two states, so the difference is not
    // carried by modes that first-order upwinding damps too fast.
    c[0] = (r == 0 ? 1.0 : -1.0) * (0.5 + 0.5 * rng.next());
    for (int k = 1; k < modes; ++k) c[k] = (2.0 * rng.next() - 1.0) / std::pow(k + 1, smooth);
    s.inits.push_back(Field::sample(s.grid, 1, [&](const Vec& x) {
      double val = 0;
      for (int k = 0; k < modes; ++k) val += c[k] * std::sin((k + 1) * kPi * x(0) / L);
      return vec1(val);
    }));
  }
  s.samples = s.inits;
  s.samples.push_back(zero_field(s.grid, 1));

  // F = ½∇·v − ∂h/∂φ
  const double f = conservative ? 0.5 * slope : -0.5 * slope;
  if (f < 0) s.expected = {Classification::Contracting, -f, conservative ? "|slope|/2" : "slope/2"};
  else if (f == 0) s.expected = {Classification::Indifferent, 0.0, "divergence-free velocity"};
  else s.expected = {Classification::Inconclusive, 0.0, "expanding"};
  s.t1 = p.num("t1");
  s.fit_lo = p.num("fit_lo");
  s.fit_hi = p.num("fit_hi");
  s.galerkin_modes = modes;
  s.provenance = conservative ? "conservation law in divergence form" : "transport law with compressing velocity";
  return s;
}

// ---------------------------------------------------------------------------

Scenario build_heat(const json& j, std::uint64_t) {
  P p(j);
  const int nodes = p.integer("nodes");
  const double L = p.num("length"), g = p.num("g");
  require(nodes >= 3, "nodes must be ≥ 3");
  require(L > 0 && g > 0, "length and g must be positive");
  Scenario s;
  s.grid = Grid::line(L, nodes);
  s.problem.name = "heat";
  s.problem.set_linear_diffusion(Vec::Constant(1, g));
  s.bounds = BoundarySpec::uniform(s.grid, BoundaryKind::Dirichlet, constant_value(vec1(0.0)));
  const double w = kPi / L;
  auto base = [=](const Vec& x) { return vec1(0.5 * std::sin(2 * w * x(0)) + 0.3 * std::sin(3 * w * x(0))); };
  s.inits.push_back(Field::sample(s.grid, 1, [=](const Vec& x) { return Vec(base(x) + vec1(std::sin(w * x(0)))); }));
  s.inits.push_back(Field::sample(s.grid, 1, base));
  s.samples = s.inits;
  s.expected = {Classification::Contracting, g * w * w, "g·π²/l²"};
  s.t1 = p.num("t1");
  s.fit_lo = p.num("fit_lo");
  s.fit_hi = p.num("fit_hi");
  s.galerkin_modes = p.integer("modes");
  s.provenance = "linear diffusion with Dirichlet walls";
  return s;
}

// ---------------------------------------------------------------------------

Scenario build_bernoulli(const json& j, std::uint64_t) {
  P p(j);
  const int nodes = p.integer("nodes");
  const double L = p.num("length");
  require(nodes >= 3 && L > 0, "need nodes ≥ 3 and length > 0");
  Scenario s;
  s.grid = Grid::rect(L, L, nodes, nodes);
  PdeProblem& pr = s.problem;
  pr.name = "bernoulli";
  pr.n_state = 1;
  pr.n_coord = 2;
  const double c = 0.5 * L;
  // h = ½∇φᵀ∇φ + U with H = I and U = ½|x − c|².
  pr.h = [c](const Vec&, const Mat& g, const Vec& x, double) {
    return vec1(0.5 * g.squaredNorm() + 0.5 * (x.array() - c).matrix().squaredNorm());
  };
  pr.dh_dPhi = [](const Vec&, const Mat&, const Vec&, double) { return Mat::Zero(1, 1).eval(); };
  pr.dh_dGrad = [](const Vec&, const Mat& g, const Vec&, double) { return g; };
  std::vector<std::function<double(double, double)>> harmonic = {
      [](double x, double y) { return x * x - y * y; }, [](double x, double y) { return x * y; },
      [](double x, double y) { return x + 2.0 * y; }};
  for (auto& f : harmonic)
    s.samples.push_back(Field::sample(s.grid, 1, [&](const Vec& x) { return vec1(f(x(0) - c, x(1) - c)); }));
  const Field first = s.samples.front();
  auto value = [c](const Vec& x, double) { return vec1((x(0) - c) * (x(0) - c) - (x(1) - c) * (x(1) - c)); };
  for (Face f : s.grid.faces()) s.bounds.set(f, {BoundaryKind::InflowGiven, value});
  s.inits = {first};
  s.certificate_only = true;
  s.expected = {Classification::Indifferent, 0.0, "incompressible potential flow"};
  s.provenance = "potential flow with kinetic and potential energy";
  return s;
}

// ---------------------------------------------------------------------------

double saturation(double alpha, double r) {
  const double z = alpha * r;
  if (z < 1e-6) return 1.0 - z * z / 3.0;
  return std::tanh(z) / z;
}

Scenario build_wafer(const json& j, std::uint64_t seed) {
  P p(j);
  const int nodes = p.integer("nodes");
  const double L = p.num("side"), hr = p.num("h"), phi_min = p.num("phi_min");
  const double phi_b = p.num("phi_boundary"), phi_ext = p.num("phi_ext"), alpha = p.num("alpha");
  const double amp = p.num("amplitude");
  require(nodes >= 3 && L > 0, "need nodes ≥ 3 and side > 0");
  require(hr > 0, "radiation constant h must be positive");
  require(phi_min > 0, "phi_min must be positive");
  require(phi_b >= phi_min && phi_ext >= phi_min, "boundary and external temperatures must be ≥ phi_min");
  require(alpha > 0 && amp >= 0, "alpha must be positive and amplitude non-negative");

  Scenario s;
  s.grid = Grid::rect(L, L, nodes, nodes);
  PdeProblem& pr = s.problem;
  pr.name = "wafer_disk";
  pr.n_state = 1;
  pr.n_coord = 2;
  const double ext4 = std::pow(phi_ext, 4);
  pr.h = [hr, ext4](const Vec& phi, const Mat&, const Vec&, double) { return vec1(hr * (std::pow(phi(0), 4) - ext4)); };
  pr.dh_dPhi = [hr](const Vec& phi, const Mat&, const Vec&, double) {
    return Mat::Constant(1, 1, 4.0 * hr * std::pow(phi(0), 3));
  };
  pr.g_flux = [alpha](const Mat& g, const Vec&, double) -> Mat { return saturation(alpha, g.norm()) * g; };
  pr.dG_dGrad = [alpha](const Mat& g, const Vec&, double) -> Mat {
    const double r = g.norm();
    const double gs = saturation(alpha, r);
    Mat J = gs * Mat::Identity(2, 2);
    if (alpha * r > 1e-12) {
      const Vec n = g.row(0).transpose() / r;
      const double sech = 1.0 / std::cosh(alpha * r);
      // ∂(g*r)/∂r = sech²(αr) along ∇φ, g* across it.
      J += (sech * sech - gs) * n * n.transpose();
    }
    return J;
  };
  // The saturating flux has no positive lower bound on its Jacobian.
  pr.lambda_bound = Mat::Zero(2, 2);
  s.bounds = BoundarySpec::uniform(s.grid, BoundaryKind::Dirichlet, constant_value(vec1(phi_b)));

  Uniform rng(seed);
  const double c1 = 0.5 + 0.5 * rng.next(), c2 = 0.5 + 0.5 * rng.next();
  auto bump = [L](const Vec& x) { return std::sin(kPi * x(0) / L) * std::sin(kPi * x(1) / L); };
  s.inits.push_back(Field::sample(s.grid, 1, [&](const Vec& x) { return vec1(phi_b + amp * c1 * bump(x)); }));
  s.inits.push_back(
      Field::sample(s.grid, 1, [&](const Vec& x) { return vec1(phi_b + amp * c2 * std::pow(bump(x), 2)); }));
  s.samples = s.inits;
  s.samples.push_back(Field(Mat::Constant(1, s.grid.size(), phi_min)));
  const double rate = 4.0 * hr * std::pow(phi_min, 3);
  s.expected = {Classification::Contracting, rate, "4·h·phi_min³"};
  s.t1 = p.num("t1");
  s.fit_lo = p.num("fit_lo");
  s.fit_hi = p.num("fit_hi");
  s.provenance = "radiative wafer heating with saturated diffusion";
  return s;
}

// ---------------------------------------------------------------------------
// Plant (c, T) and observer (ĉ, T̂) on one grid.

Scenario build_reactor(const json& j, std::uint64_t) {
  P p(j);
  const int nodes = p.integer("nodes");
  const double L = p.num("size"), speed = p.num("velocity"), g = p.num("g"), E = p.num("E");
  const double k1 = p.num("k1"), k2 = p.num("k2");
  const double band_lo = p.num("band_lo"), band_hi = p.num("band_hi");
  const double cf_mean = p.num("cf_mean"), cf_amp = p.num("cf_amp"), cf_freq = p.num("cf_freq");
  const double T_f = p.num("T_f"), T_in = p.num("T_in");
  const int quad = p.integer("quadrature_points");
  require(nodes >= 3 && L > 0, "need nodes ≥ 3 and size > 0");
  require(g >= 0 && E > 0 && speed >= 0, "need g ≥ 0, E > 0, velocity ≥ 0");
  require(T_f > 0 && T_in > 0, "temperatures must be positive");
  require(quad >= 1 && quad <= 64, "quadrature_points must lie in [1, 64]");
  require(band_lo <= band_hi, "band_lo must not exceed band_hi");

  Scenario s;
  s.grid = Grid::rect(L, L, nodes, nodes);
  PdeProblem& pr = s.problem;
  pr.name = "reactor_observer";
  pr.n_state = 4;
  pr.n_coord = 2;

  Vec gl_x, gl_w;
  gauss_legendre(quad, gl_x, gl_w);
  auto arrhenius = [E](double T) { return std::exp(-E / T); };
  // ∫_T^{T̂} e^{−E/s} ds
  auto innovation = [=](double T, double That) {
    const double mid = 0.5 * (T + That), half = 0.5 * (That - T);
    double sum = 0.0;
    for (Eigen::Index q = 0; q < gl_x.size(); ++q) sum += gl_w(q) * arrhenius(mid + half * gl_x(q));
    return half * sum;
  };
  auto source = [=](const Vec& phi) {
    const double r = arrhenius(phi(1)) * phi(0);
    const double rh = arrhenius(phi(3)) * phi(2);
    const double inn = innovation(phi(1), phi(3));
    Vec out(4);
    out << -r, -100.0 * r, -rh + k1 * inn, -100.0 * rh + k2 * inn;
    return out;
  };
  const Vec vel = (Vec(2) << speed, 0.0).finished();
  pr.h = [vel, source](const Vec& phi, const Mat& grad, const Vec&, double) -> Vec {
    return grad * vel - source(phi);
  };
  pr.dh_dPhi = [=](const Vec& phi, const Mat&, const Vec&, double) -> Mat {
    const double e = arrhenius(phi(1)), eh = arrhenius(phi(3));
    const double dr_dT = phi(0) * E / (phi(1) * phi(1)) * e;
    const double drh_dTh = phi(2) * E / (phi(3) * phi(3)) * eh;
    Mat d = Mat::Zero(4, 4);
    d.row(0) << -e, -dr_dT, 0, 0;
    d.row(1) = 100.0 * d.row(0);
    d.row(2) << 0, -k1 * e, -eh, -drh_dTh + k1 * eh;
    d.row(3) << 0, -k2 * e, -100.0 * eh, -100.0 * drh_dTh + k2 * eh;
    return -d;
  };
  pr.dh_dGrad = [vel](const Vec&, const Mat&, const Vec&, double) -> Mat {
    return Mat::Ones(4, 1) * vel.transpose();
  };
  if (g > 0) pr.set_linear_diffusion(Vec::Constant(4, g));
  else pr.lambda_bound = Mat::Zero(8, 8);

  auto inlet = [=](const Vec& x, double t) {
    Vec out(4);
    if (x(1) >= band_lo && x(1) <= band_hi) {
      const double c = cf_mean + cf_amp * std::sin(cf_freq * t);
      out << c, T_f, c, T_f;
    } else {
      out << 0.0, T_in, 0.0, T_in;
    }
    return out;
  };
  s.bounds.set(Face::XLow, {BoundaryKind::Dirichlet, inlet});
  s.bounds.set(Face::XHigh, {BoundaryKind::Neumann, {}});
  s.bounds.set(Face::YLow, {BoundaryKind::Neumann, {}});
  s.bounds.set(Face::YHigh, {BoundaryKind::Neumann, {}});

  Vec start(4);
  start << p.num("c0"), p.num("T0"), p.num("c_hat0"), p.num("T_hat0");
  s.inits.push_back(Field(start * Vec::Ones(s.grid.size()).transpose()));

  // Sampled observer states span the admissible box 0 ≤ ĉ ≤ 1, T_lo ≤ T̂ ≤ T_hi.
  const double T_lo = p.num("T_sample_lo"), T_hi = p.num("T_sample_hi");
  require(T_lo > 0 && T_hi >= T_lo, "need 0 < T_sample_lo ≤ T_sample_hi");
  std::vector<Vec> points;
  for (double c : {0.0, 0.5, 1.0})
    for (double T : {T_lo, 0.5 * (T_lo + T_hi), T_hi}) {
      Vec v(4);
      v << 0.0, T_in, c, T;
      points.push_back(v);
    }
  s.certificate_components = {2, 3};

  // Diagonal metric diag(θ₁, θ₂) on the observer block; θ₁/θ₂ from a log grid unless given.
  const Grid probe = Grid::rect(L, L, 3, 3);
  auto pointwise_samples = [&](const Grid& gr) {
    std::vector<Field> out;
    for (const Vec& v : points) out.push_back(Field(v * Vec::Ones(gr.size()).transpose()));
    return out;
  };
  auto theta_for = [](double ratio) {
    Mat th = Mat::Identity(4, 4);
    th(2, 2) = ratio;
    return th;
  };
  double ratio = p.num("theta_ratio");
  if (ratio <= 0) {
    double best = std::numeric_limits<double>::infinity();
    const auto probe_samples = pointwise_samples(probe);
    for (int k = 0; k <= 48; ++k) {
      const double cand = std::pow(10.0, k / 16.0);
      const PdeProblem tp = apply_metric(pr, MetricTransform{theta_for(cand)});
      const double lam = first_order_rate(tp, probe, probe_samples, {0.0}, s.certificate_components).lambda_V;
      if (lam < best - 1e-15) {
        best = lam;
        ratio = cand;
      }
    }
  }
  s.transform = MetricTransform{theta_for(ratio)};
  s.samples = pointwise_samples(s.grid);
  s.params["theta_ratio"] = ratio;
  s.error_pairs = {{2, 0}, {3, 1}};
  s.error_metric = s.transform->metric().block(2, 2, 2, 2);
  const Certificate cert = s.certificate();
  s.expected = {cert.classification, cert.rate, "sampled observer Jacobian in the metric diag(θ₁, θ₂)"};
  s.t1 = p.num("horizon");
  s.dt = p.num("dt");
  s.fit_lo = 0.1 * s.t1;
  s.fit_hi = s.t1;
  s.provenance = "Arrhenius reaction A→B with a temperature-driven observer; E, v, inlet data and gains are defaults";
  return s;
}

// ---------------------------------------------------------------------------

Scenario build_navier_stokes(const json& j, std::uint64_t) {
  P p(j);
  const int nodes = p.integer("nodes");
  const double L = p.num("length"), mag = p.num("magnitude"), g = p.num("g");
  const std::string flow = p.str("flow");
  require(nodes >= 3 && L > 0, "need nodes ≥ 3 and length > 0");
  require(g >= 0, "viscosity must be non-negative");
  require(flow == "rotation" || flow == "strain", "flow must be 'rotation' or 'strain'");
  Scenario s;
  s.grid = Grid::rect(L, L, nodes, nodes);
  PdeProblem& pr = s.problem;
  pr.name = "navier_stokes";
  pr.n_state = 2;
  pr.n_coord = 2;
  // h_i = v·∇v_i, so ∂h/∂v is the velocity gradient and every row of ∂h/∂∇v is v.
  pr.h = [](const Vec& v, const Mat& grad, const Vec&, double) -> Vec { return grad * v; };
  pr.dh_dPhi = [](const Vec&, const Mat& grad, const Vec&, double) -> Mat { return grad; };
  pr.dh_dGrad = [](const Vec& v, const Mat&, const Vec&, double) -> Mat { return Mat::Ones(2, 1) * v.transpose(); };
  if (g > 0) pr.set_linear_diffusion(Vec::Constant(2, g));
  else pr.lambda_bound = Mat::Zero(4, 4);
  const double c = 0.5 * L;
  const bool rot = flow == "rotation";
  auto field = [=](const Vec& x, double) {
    Vec v(2);
    if (rot) v << -mag * (x(1) - c), mag * (x(0) - c);
    else v << mag * (x(0) - c), -mag * (x(1) - c);
    return v;
  };
  s.bounds = BoundarySpec::uniform(s.grid, BoundaryKind::Dirichlet, field);
  s.samples.push_back(Field::sample(s.grid, 2, [&](const Vec& x) { return field(x, 0.0); }));
  s.inits = s.samples;
  s.certificate_only = true;
  const double bound = g * 2.0 * kPi * kPi / (L * L);
  const double lam = rot ? 0.0 : std::abs(mag);
  if (lam - bound < -kCertificateTolerance) s.expected = {Classification::Contracting, bound - lam, "Σ gπ²/l² − strain"};
  else if (lam <= kCertificateTolerance) s.expected = {bound > 0 ? Classification::Contracting : Classification::SemiContracting, 0.0, "skew velocity gradient"};
  else s.expected = {Classification::Inconclusive, 0.0, "strain exceeds viscous bound"};
  s.provenance = "certificate over a supplied incompressible velocity snapshot";
  return s;
}

// ---------------------------------------------------------------------------

Scenario build_lq_control(const json& j, std::uint64_t) {
  P p(j);
  const std::string system = p.str("system");
  const double t_f = p.num("t_f");
  require(t_f > 0, "t_f must be positive");
  Scenario s;
  s.kind = ScenarioKind::Control;
  s.dt = p.num("dt");
  require(s.dt > 0, "dt must be positive");
  if (system == "scalar") {
    const Mat A = Mat::Constant(1, 1, p.num("a")), B = Mat::Constant(1, 1, p.num("b"));
    const Mat Q = Mat::Constant(1, 1, p.num("q")), R = Mat::Constant(1, 1, p.num("r"));
    require(p.num("q") > 0 && p.num("r") > 0, "q and r must be positive");
    s.control = ControlProblem::linear_quadratic(A, B, Q, R, Mat::Constant(1, 1, p.num("p_f")), t_f);
  } else if (system == "double_integrator") {
    Mat A(2, 2), B(2, 1);
    A << 0, 1, 0, 0;
    B << 0, 1;
    s.control = ControlProblem::linear_quadratic(A, B, p.num("q") * Mat::Identity(2, 2),
                                                 Mat::Constant(1, 1, p.num("r")),
                                                 p.num("p_f") * Mat::Identity(2, 2), t_f);
  } else if (system == "pendulum") {
    ControlProblem cp;
    cp.n_state = 2;
    cp.n_control = 1;
    cp.f = [](const Vec& x, const Vec& u, double) -> Vec {
      Vec d(2);
      d << x(1), -std::sin(x(0)) + u(0);
      return d;
    };
    cp.df_dx = [](const Vec& x, const Vec&, double) -> Mat {
      Mat d(2, 2);
      d << 0, 1, -std::cos(x(0)), 0;
      return d;
    };
    cp.df_du = [](const Vec&, const Vec&, double) -> Mat { return (Mat(2, 1) << 0, 1).finished(); };
    cp.cost = QuadraticCost{p.num("q") * Mat::Identity(2, 2), Mat::Constant(1, 1, p.num("r")), {}, {}};
    const double pf = p.num("p_f");
    cp.terminal = [pf](const Vec& x) { return 0.5 * pf * x.squaredNorm(); };
    cp.terminal_grad = [pf](const Vec& x) -> Vec { return pf * x; };
    cp.terminal_hessian = [pf](const Vec&) -> Mat { return pf * Mat::Identity(2, 2); };
    cp.t_f = t_f;
    s.control = cp;
  } else {
    throw Error(ErrorCode::BadParams, "system must be scalar, double_integrator or pendulum");
  }
  Vec x0 = to_vec(p.raw("x0"));
  if (x0.size() == 1) x0 = Vec::Constant(s.control->n_state, x0(0));
  require(x0.size() == s.control->n_state, "x0 has the wrong dimension for this system");
  s.control_x0 = {x0};
  s.t0 = 0.0;
  s.t1 = t_f;
  s.expected = {Classification::Contracting, 0.0, "closed loop in the metric H"};
  s.provenance = "linear-quadratic regulator through Hamiltonian characteristics";
  return s;
}

Scenario build_lq_estimation(const json& j, std::uint64_t seed) {
  P p(j);
  const std::string system = p.str("system");
  Scenario s;
  s.kind = ScenarioKind::Estimation;
  s.dt = p.num("dt");
  s.t1 = p.num("horizon");
  require(s.dt > 0 && s.t1 > 0, "dt and horizon must be positive");
  Mat A, B, C;
  Vec x_true;
  if (system == "scalar") {
    A = Mat::Constant(1, 1, p.num("a"));
    B = Mat::Identity(1, 1);
    C = Mat::Constant(1, 1, p.num("c"));
    x_true = vec1(p.num("x_true0"));
  } else if (system == "two_state") {
    A.resize(2, 2);
    A << 0, 1, -1, -0.5;
    B = Mat::Identity(2, 2);
    C.resize(1, 2);
    C << p.num("c"), 0;
    x_true = Vec::Constant(2, p.num("x_true0"));
  } else {
    throw Error(ErrorCode::BadParams, "system must be scalar or two_state");
  }
  const int n = static_cast<int>(A.rows());
  require(p.num("r_m") >= 0 && p.num("q") > 0 && p.num("pi0") > 0, "need r_m ≥ 0, q > 0, pi0 > 0");
  s.observer = ObserverProblem::linear(A, B, C, Mat::Constant(1, 1, p.num("r_m")), p.num("q") * Mat::Identity(n, n),
                                       p.num("pi0") * Mat::Identity(n, n), Vec::Constant(n, p.num("x_hat0")));
  // Synthetic measurements from the undisturbed plant, RK4 with 10 substeps per sample.
  const double noise = p.num("noise");
  Uniform rng(seed);
  Vec x = x_true;
  const auto steps = static_cast<long>(std::ceil(s.t1 / s.dt - 1e-9));
  for (long k = 0; k <= steps; ++k) {
    const double t = k * s.dt;
    s.true_states.push_back(x);
    s.measurements.t.push_back(t);
    Vec y = C * x;
    if (noise > 0) y.array() += noise * (2.0 * rng.next() - 1.0);
    s.measurements.y.push_back(y);
    const double h = s.dt / 10.0;
    for (int sub = 0; sub < 10; ++sub) {
      const Vec k1 = A * x, k2 = A * (x + 0.5 * h * k1), k3 = A * (x + 0.5 * h * k2), k4 = A * (x + h * k3);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  s.expected = {Classification::Contracting, 0.0, "information matrix stays positive definite"};
  s.provenance = "continuous-time optimal observer on a linear plant";
  return s;
}

// ---------------------------------------------------------------------------

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> table = [] {
    std::map<std::string, Entry> t;
    const std::vector<ParamDoc> transport_common = {
        {"nodes", "integer", 201, "grid nodes on [0, length]"},
        {"length", "number", 1.0, "domain length"},
        {"modes", "integer", 4, "sine modes in the random initial states"},
        {"smoothness", "number", 3.0, "mode k > 1 gets a random coefficient in ±1/k^smoothness"},
        {"t1", "number", 1.5, "simulation horizon"},
        {"fit_lo", "number", 0.0, "start of the rate-fit window"},
        {"fit_hi", "number", 1.0, "end of the rate-fit window"},
    };
    auto with = [](std::vector<ParamDoc> base, std::vector<ParamDoc> extra) {
      base.insert(base.begin(), extra.begin(), extra.end());
      return base;
    };
    t["transport_compress"] = {
        "1-D transport ∂φ/∂t + v·∇φ = 0 with v(x) = offset − slope·x; rate slope/2",
        with(transport_common, {{"slope", "number", 1.0, "velocity slope (compression for slope > 0)"},
                                {"offset", "number", 0.0, "velocity at x = 0"}}),
        [](const json& j, std::uint64_t seed) { return build_transport(j, seed, false); }};
    t["transport_conserve"] = {
        "1-D conservation law ∂φ/∂t + ∇·(φv) = 0 with v(x) = offset − slope·x",
        with(transport_common, {{"slope", "number", 0.0, "velocity slope"},
                                {"offset", "number", 1.0, "velocity at x = 0"}}),
        [](const json& j, std::uint64_t seed) { return build_transport(j, seed, true); }};
    t["heat"] = {"1-D heat equation with Dirichlet walls; rate g·π²/l²",
                 {{"nodes", "integer", 201, "grid nodes"},
                  {"length", "number", kPi, "domain length"},
                  {"g", "number", 1.0, "diffusivity"},
                  {"modes", "integer", 2, "sine modes for galerkin runs"},
                  {"t1", "number", 1.0, "simulation horizon"},
                  {"fit_lo", "number", 0.2, "start of the rate-fit window"},
                  {"fit_hi", "number", 1.0, "end of the rate-fit window"}},
                 build_heat};
    t["bernoulli_indifferent"] = {"2-D potential flow, certificate only; indifferent",
                                  {{"nodes", "integer", 33, "nodes per axis"},
                                   {"length", "number", 2.0, "side of the square domain"}},
                                  build_bernoulli};
    t["wafer_disk"] = {"2-D radiative wafer with saturated diffusion; rate ≥ 4·h·phi_min³",
                       {{"nodes", "integer", 17, "nodes per axis"},
                        {"side", "number", 4.0, "side of the square wafer"},
                        {"h", "number", 1.0, "radiation constant"},
                        {"phi_min", "number", 0.5, "lower temperature bound used by the certificate"},
                        {"phi_boundary", "number", 0.5, "Dirichlet temperature on the rim"},
                        {"phi_ext", "number", 0.5, "external temperature"},
                        {"alpha", "number", 1.0, "saturation constant of g* = tanh(αr)/(αr)"},
                        {"amplitude", "number", 1.0, "initial bump amplitude above the rim temperature"},
                        {"t1", "number", 3.0, "simulation horizon"},
                        {"fit_lo", "number", 0.3, "start of the rate-fit window"},
                        {"fit_hi", "number", 2.0, "end of the rate-fit window"}},
                       build_wafer};
    t["reactor_observer"] = {
        "2-D reactor A→B with plant and temperature-driven observer (4 components)",
        {{"nodes", "integer", 50, "nodes per axis (100 for the full-resolution run)"},
         {"size", "number", 100.0, "side of the square reaction volume"},
         {"velocity", "number", 1.0, "uniform left-to-right flow speed (default, not from the source)"},
         {"g", "number", 1.0, "diffusion constant"},
         {"E", "number", 1000.0, "activation energy (default, not from the source)"},
         {"k1", "number", 1.0, "observer gain on the concentration"},
         {"k2", "number", -1.0, "observer gain on the temperature"},
         {"theta_ratio", "number", 0.0, "θ₁/θ₂ of the observer metric; 0 searches a log grid"},
         {"band_lo", "number", 40.0, "lower edge of the injection band"},
         {"band_hi", "number", 60.0, "upper edge of the injection band"},
         {"cf_mean", "number", 0.8, "mean injected concentration"},
         {"cf_amp", "number", 0.2, "amplitude of the injected concentration"},
         {"cf_freq", "number", 0.1, "angular frequency of the injected concentration"},
         {"T_f", "number", 520.0, "injection temperature"},
         {"T_in", "number", 500.0, "inlet temperature outside the band"},
         {"c0", "number", 0.0, "initial plant concentration"},
         {"T0", "number", 500.0, "initial plant temperature"},
         {"c_hat0", "number", 0.5, "initial observer concentration"},
         {"T_hat0", "number", 480.0, "initial observer temperature"},
         {"T_sample_lo", "number", 400.0, "lowest observer temperature sampled by the certificate"},
         {"T_sample_hi", "number", 520.0, "highest observer temperature sampled by the certificate"},
         {"quadrature_points", "integer", 8, "Gauss-Legendre points of the innovation integral"},
         {"horizon", "number", 150.0, "simulation horizon"},
         {"dt", "number", 0.4, "time step"}},
        build_reactor};
    t["navier_stokes_certificate"] = {
        "2-D Navier-Stokes certificate on a supplied velocity snapshot",
        {{"flow", "string", "rotation", "'rotation' (skew gradient) or 'strain'"},
         {"magnitude", "number", 1.0, "angular speed or strain rate"},
         {"g", "number", 0.1, "viscosity"},
         {"length", "number", 1.0, "side of the square domain"},
         {"nodes", "integer", 21, "nodes per axis"}},
        build_navier_stokes};
    t["lq_control"] = {"optimal control through backward characteristics",
                       {{"system", "string", "scalar", "'scalar', 'double_integrator' or 'pendulum'"},
                        {"a", "number", 0.0, "scalar plant coefficient"},
                        {"b", "number", 1.0, "scalar input gain"},
                        {"q", "number", 1.0, "state weight"},
                        {"r", "number", 1.0, "control weight"},
                        {"p_f", "number", 0.2, "terminal weight"},
                        {"t_f", "number", 10.0, "final time"},
                        {"x0", "array", json::array({1.0}), "initial state; one value fills every component"},
                        {"dt", "number", 0.01, "time step"}},
                       build_lq_control};
    t["lq_estimation"] = {"optimal observer on a linear plant with synthetic measurements",
                          {{"system", "string", "scalar", "'scalar' or 'two_state'"},
                           {"a", "number", -0.5, "scalar plant coefficient"},
                           {"c", "number", 1.0, "measurement gain"},
                           {"r_m", "number", 1.0, "measurement weight"},
                           {"q", "number", 1.0, "disturbance weight"},
                           {"pi0", "number", 1.0, "initial information"},
                           {"x_true0", "number", 1.0, "initial plant state (every component)"},
                           {"x_hat0", "number", 0.0, "initial estimate (every component)"},
                           {"noise", "number", 0.0, "uniform measurement noise amplitude"},
                           {"horizon", "number", 10.0, "estimation horizon"},
                           {"dt", "number", 0.01, "time step"}},
                          build_lq_estimation};
    return t;
  }();
  return table;
}

const Entry& lookup(const std::string& name) {
  const auto& t = registry();
  auto it = t.find(name);
  if (it == t.end()) throw Error(ErrorCode::UnknownScenario, "unknown scenario '" + name + "'");
  return it->second;
}

bool type_matches(const std::string& type, const json& v) {
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "string") return v.is_string();
  if (type == "array") return v.is_array() || v.is_number();
  return false;
}

}  // namespace

std::vector<std::string> scenario_names() {
  std::vector<std::string> out;
  for (const auto& [name, entry] : registry()) out.push_back(name);
  return out;
}

std::vector<ParamDoc> scenario_params(const std::string& name) { return lookup(name).params; }

std::string describe_scenario(const std::string& name) {
  const Entry& e = lookup(name);
  std::ostringstream os;
  os << name << ": " << e.description << "\n";
  for (const auto& p : e.params) os << "  " << p.name << " (" << p.type << ", default " << p.default_value.dump() << "): " << p.doc << "\n";
  return os.str();
}

Scenario load_scenario(const std::string& name, const json& params, std::uint64_t seed) {
  const Entry& e = lookup(name);
  if (!params.is_null() && !params.is_object()) throw Error(ErrorCode::BadParams, "scenario params must be an object");
  json merged = json::object();
  for (const auto& p : e.params) merged[p.name] = p.default_value;
  if (params.is_object()) {
    for (const auto& [key, value] : params.items()) {
      auto it = std::find_if(e.params.begin(), e.params.end(), [&](const ParamDoc& d) { return d.name == key; });
      if (it == e.params.end()) throw Error(ErrorCode::BadParams, "scenario " + name + " has no parameter '" + key + "'");
      if (!type_matches(it->type, value))
        throw Error(ErrorCode::BadParams, "parameter '" + key + "' must be of type " + it->type);
      merged[key] = value;
    }
  }
  Scenario s;
  try {
    s = e.build(merged, seed);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::BadParams, std::string("bad parameter: ") + ex.what());
  }
  s.name = name;
  s.description = e.description;
  s.seed = seed;
  for (const auto& [k, v] : merged.items())
    if (!s.params.contains(k)) s.params[k] = v;
  return s;
}

PdeProblem Scenario::certificate_problem() const {
  return transform ? apply_metric(problem, *transform) : problem;
}

Certificate Scenario::certificate() const {
  if (kind != ScenarioKind::Pde) throw Error(ErrorCode::BadParams, "scenario " + name + " has no PDE certificate");
  return combined_certificate(certificate_problem(), grid, bounds, samples, t_samples, certificate_components);
}

double Scenario::step_size() const {
  if (dt > 0) return dt;
  if (kind != ScenarioKind::Pde || inits.empty()) throw Error(ErrorCode::BadParams, "no step size available");
  const Discretization disc(problem, grid, bounds);
  double limit = std::numeric_limits<double>::infinity();
  for (const Field& f : inits) limit = std::min(limit, disc.stable_dt(f, t0));
  if (!std::isfinite(limit)) return 0.01 * (t1 - t0);
  return 0.99 * limit;
}

Field Scenario::error_field(const Field& state) const {
  Field out(static_cast<int>(error_pairs.size()), state.n_nodes());
  for (std::size_t r = 0; r < error_pairs.size(); ++r)
    out.values.row(static_cast<Eigen::Index>(r)) =
        state.values.row(error_pairs[r].first) - state.values.row(error_pairs[r].second);
  return out;
}

DecaySeries Scenario::error_series(const Trajectory& run) const {
  if (error_pairs.empty()) throw Error(ErrorCode::BadParams, "scenario " + name + " has no observer error");
  const Vec w = grid.quadrature_weights();
  const Mat M = error_metric.size() ? error_metric : Mat::Identity(error_pairs.size(), error_pairs.size());
  DecaySeries out;
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    const Mat e = error_field(run.snapshots[k]).values;
    out.times.push_back(run.times[k]);
    out.d2.push_back((e.array() * (M * e).array()).colwise().sum().matrix().dot(w));
  }
  return out;
}

}  // namespace contraction
