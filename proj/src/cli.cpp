#include "contraction/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "contraction/galerkin.hpp"
#include "contraction/io.hpp"
#include "contraction/scenarios.hpp"

namespace contraction {

using nlohmann::json;

namespace {

const char* const kGridKeys[] = {"nodes", "length", "side", "size"};
const char* const kTimeKeys[] = {"t1", "horizon", "t_f"};

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw Error(ErrorCode::ConfigError, "unknown key '" + key + "' in " + where);
  }
}

bool has_param(const std::vector<ParamDoc>& docs, const std::string& key) {
  return std::any_of(docs.begin(), docs.end(), [&](const ParamDoc& d) { return d.name == key; });
}

Scenario load(const RunConfig& c) {
  if (c.scenario.empty()) throw Error(ErrorCode::ConfigError, "no scenario given");
  const auto docs = scenario_params(c.scenario);
  json params = c.params.is_null() ? json::object() : c.params;
  for (const auto& [key, value] : c.grid.items()) {
    const bool grid_key = std::any_of(std::begin(kGridKeys), std::end(kGridKeys), [&](const char* k) { return key == k; });
    if (!grid_key || !has_param(docs, key))
      throw Error(ErrorCode::ConfigError, "scenario " + c.scenario + " has no grid parameter '" + key + "'");
    params[key] = value;
  }
  bool time_mapped = false;
  if (c.t1) {
    for (const char* k : kTimeKeys)
      if (has_param(docs, k)) {
        params[k] = *c.t1;
        time_mapped = true;
      }
  }
  if (c.dt && has_param(docs, "dt")) params["dt"] = *c.dt;
  Scenario s = load_scenario(c.scenario, params, c.seed);
  if (c.t1 && !time_mapped) s.t1 = *c.t1;
  if (c.dt) s.dt = *c.dt;
  if (s.t1 <= s.t0) throw Error(ErrorCode::ConfigError, "t1 must exceed the start time");
  return s;
}

std::string prepare_dir(const std::string& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + out + ": " + ec.message());
  return out;
}

std::string path_in(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os = open_output(path);
  os << text;
}

Mat decay_metric(const Scenario& s) { return s.transform ? s.transform->metric() : Mat(); }

void require_kind(const Scenario& s, ScenarioKind kind, const std::string& command) {
  if (s.kind != kind) throw Error(ErrorCode::ConfigError, "command " + command + " does not apply to scenario " + s.name);
}

struct Decay {
  DecaySeries series;
  std::optional<RateFit> fit;
  std::string degenerate;  // reason when no fit was possible
  double dt = 0.0;
};

Decay decay_of(const Scenario& s, bool identical) {
  if (s.certificate_only) throw Error(ErrorCode::ConfigError, "scenario " + s.name + " is certificate-only");
  const Discretization disc(s.problem, s.grid, s.bounds);
  Decay d;
  d.dt = s.step_size();
  if (!s.error_pairs.empty() && !identical) {
    d.series = s.error_series(run(disc, s.inits.at(0), s.t0, s.t1, d.dt));
  } else {
    const Field& a = s.inits.at(0);
    const Field& b = identical || s.inits.size() < 2 ? s.inits.at(0) : s.inits.at(1);
    d.series = perturbation_experiment(disc, a, b, s.t0, s.t1, d.dt, decay_metric(s));
  }
  try {
    d.fit = fit_rate(d.series, s.fit_lo, s.fit_hi);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateSeries) throw;
    d.degenerate = e.what();
  }
  return d;
}

std::string fit_line(const Scenario& s, const Certificate& cert, const Decay& d) {
  std::ostringstream os;
  os << "certificate rate " << fmt_num(cert.rate) << " (" << to_string(cert.classification) << ")";
  if (d.fit)
    os << ", fitted rate " << fmt_num(d.fit->rate) << " on [" << fmt_num(s.fit_lo) << ", " << fmt_num(s.fit_hi)
       << "], r^2 " << fmt_num(d.fit->r_squared);
  else
    os << ", degenerate series: " << d.degenerate;
  return os.str();
}

int exit_for(Classification c) { return c == Classification::Inconclusive ? 2 : 0; }

std::string vec_text(const Vec& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt_num(v(i));
  return out;
}

Mat smallest_info(const ObserverRun& r, double& min_eig) {
  min_eig = std::numeric_limits<double>::infinity();
  Mat worst;
  for (const auto& e : r.estimates) {
    const double m = Eigen::SelfAdjointEigenSolver<Mat>(symmetric_part(e.Pi)).eigenvalues().minCoeff();
    if (m < min_eig) {
      min_eig = m;
      worst = e.Pi;
    }
  }
  return worst;
}

struct ObserverOutputs {
  ObserverRun run;
  KalmanRun oracle;
  Mat C;
  double max_gap = 0.0;    // observer vs oracle estimate
  double final_error = 0.0;
};

ObserverOutputs observe_linear(const Scenario& s) {
  const ObserverProblem& op = *s.observer;
  ObserverOutputs o;
  o.run = run_observer(op, s.measurements, s.t0, s.t1, s.dt);
  const Vec x0 = Vec::Zero(op.n_state);
  const Mat A = op.df_dx(x0, s.t0);
  o.C = op.dy_dx(x0, s.t0);
  o.oracle = kalman_bucy_oracle(A, op.B, o.C, op.measurement_weight, op.disturbance_weight, op.Pi0.inverse(),
                                op.x_hat0, s.measurements, s.t0, s.t1, s.dt);
  const std::size_t n = std::min(o.run.estimates.size(), o.oracle.x_hat.size());
  for (std::size_t k = 0; k < n; ++k)
    o.max_gap = std::max(o.max_gap, (o.run.estimates[k].x_hat - o.oracle.x_hat[k]).cwiseAbs().maxCoeff());
  const Estimate& last = o.run.estimates.back();
  o.final_error = (last.x_hat - s.true_states.back()).norm();
  return o;
}

}  // namespace

json RunConfig::to_json() const {
  json j;
  j["command"] = command;
  j["scenario"] = scenario;
  j["params"] = params;
  j["grid"] = grid;
  j["time"] = json::object();
  if (t1) j["time"]["t1"] = *t1;
  if (dt) j["time"]["dt"] = *dt;
  j["out"] = out;
  j["seed"] = seed;
  j["options"] = {{"svg", svg}, {"identical_inits", identical_inits}, {"snapshot_every", snapshot_every}, {"modes", modes}};
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be an object");
  reject_unknown(j, {"command", "scenario", "params", "grid", "time", "out", "seed", "options"}, "config");
  RunConfig c;
  try {
    c.command = get_or<std::string>(j, "command", c.command);
    c.scenario = get_or<std::string>(j, "scenario", c.scenario);
    if (j.contains("params")) c.params = j.at("params");
    if (j.contains("grid")) c.grid = j.at("grid");
    if (!c.params.is_object() || !c.grid.is_object())
      throw Error(ErrorCode::ConfigError, "params and grid must be objects");
    if (j.contains("time")) {
      const json& t = j.at("time");
      reject_unknown(t, {"t1", "dt"}, "time");
      if (t.contains("t1")) c.t1 = t.at("t1").get<double>();
      if (t.contains("dt")) c.dt = t.at("dt").get<double>();
    }
    c.out = get_or<std::string>(j, "out", c.out);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    if (j.contains("options")) {
      const json& o = j.at("options");
      reject_unknown(o, {"svg", "identical_inits", "snapshot_every", "modes"}, "options");
      c.svg = get_or<bool>(o, "svg", c.svg);
      c.identical_inits = get_or<bool>(o, "identical_inits", c.identical_inits);
      c.snapshot_every = get_or<int>(o, "snapshot_every", c.snapshot_every);
      c.modes = get_or<int>(o, "modes", c.modes);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad config value: ") + e.what());
  }
  if (c.dt && *c.dt <= 0) throw Error(ErrorCode::ConfigError, "dt must be positive");
  if (c.snapshot_every < 0 || c.modes < 0) throw Error(ErrorCode::ConfigError, "snapshot_every and modes must be ≥ 0");
  return c;
}

RunConfig RunConfig::read(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot read config " + path);
  try {
    return from_json(json::parse(is));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
}

CommandResult cmd_analyze(const RunConfig& config) {
  const Scenario s = load(config);
  const std::string dir = prepare_dir(config.out);
  CommandResult r;
  std::ostringstream msg, csv;
  msg << "scenario: " << s.name << "\n";
  if (s.kind == ScenarioKind::Pde) {
    const Certificate cert = s.certificate();
    msg << cert.report() << "expected: " << to_string(s.expected.classification) << " rate "
        << fmt_num(s.expected.rate) << " (" << s.expected.formula << ")\n";
    csv << "scenario," << Certificate::csv_header() << ",expected_classification,expected_rate\n"
        << s.name << "," << cert.csv_row() << "," << to_string(s.expected.classification) << ","
        << fmt_num(s.expected.rate) << "\n";
    r.exit_code = exit_for(cert.classification);
  } else if (s.kind == ScenarioKind::Control) {
    csv << "x0_index,rate,classification,min_eig_H,cost,convexity_lost\n";
    const auto sols = hjb_solve(*s.control, s.control_x0, s.dt);
    for (std::size_t k = 0; k < sols.size(); ++k) {
      const HjbSolution& sol = sols[k];
      const ClosedLoopReport cl = closed_loop_contraction_check(*s.control, sol);
      const double min_h = *std::min_element(cl.min_eig_H.begin(), cl.min_eig_H.end());
      csv << k << "," << fmt_num(cl.rate) << "," << to_string(cl.classification) << "," << fmt_num(min_h)
          << "," << fmt_num(sol.cost) << "," << (sol.convexity_lost ? 1 : 0) << "\n";
      msg << "x0 = [" << vec_text(sol.x0) << "]: closed-loop rate " << fmt_num(cl.rate) << " in the metric H ("
          << to_string(cl.classification) << "), min eig H " << fmt_num(min_h) << "\n";
      if (cl.classification == Classification::Inconclusive || sol.convexity_lost) r.exit_code = 2;
    }
  } else {
    const ObserverRun run = run_observer(*s.observer, s.measurements, s.t0, s.t1, s.dt);
    double min_eig = 0.0;
    smallest_info(run, min_eig);
    const Classification c = min_eig > kCertificateTolerance ? Classification::Contracting : Classification::Inconclusive;
    csv << "min_eig_Pi,classification\n" << fmt_num(min_eig) << "," << to_string(c) << "\n";
    msg << "information matrix min eigenvalue " << fmt_num(min_eig) << " (" << to_string(c) << ")\n";
    r.exit_code = exit_for(c);
  }
  write_text(path_in(dir, "certificate.txt"), msg.str());
  write_text(path_in(dir, "certificate.csv"), csv.str());
  r.files = {path_in(dir, "certificate.txt"), path_in(dir, "certificate.csv")};
  r.message = msg.str();
  return r;
}

CommandResult cmd_simulate(const RunConfig& config) {
  const Scenario s = load(config);
  require_kind(s, ScenarioKind::Pde, "simulate");
  if (s.certificate_only) throw Error(ErrorCode::ConfigError, "scenario " + s.name + " is certificate-only");
  const std::string dir = prepare_dir(config.out);
  const double dt = s.step_size();
  const auto steps = static_cast<int>(std::ceil((s.t1 - s.t0) / dt - 1e-9));
  RunOptions opts;
  opts.snapshot_every = config.snapshot_every > 0 ? config.snapshot_every : std::max(1, steps / 200);
  const Trajectory tr = run(Discretization(s.problem, s.grid, s.bounds), s.inits.at(0), s.t0, s.t1, dt, opts);
  CommandResult r;
  r.files.push_back(path_in(dir, "trajectory.csv"));
  tr.write_csv(r.files.back(), s.grid);
  std::ostringstream msg;
  msg << s.name << ": " << steps << " steps of " << fmt_num(dt) << " to t = " << fmt_num(tr.times.back()) << ", "
      << tr.snapshots.size() << " snapshots\n";
  if (!s.error_pairs.empty()) {
    const DecaySeries err = s.error_series(tr);
    r.files.push_back(path_in(dir, "observer_error.csv"));
    err.write_csv(r.files.back());
    msg << "observer error squared norm " << fmt_num(err.d2.front()) << " -> " << fmt_num(err.d2.back()) << "\n";
  }
  r.message = msg.str();
  return r;
}

CommandResult cmd_perturb(const RunConfig& config) {
  const Scenario s = load(config);
  require_kind(s, ScenarioKind::Pde, "perturb");
  const std::string dir = prepare_dir(config.out);
  const Certificate cert = s.certificate();
  const Decay d = decay_of(s, config.identical_inits);
  CommandResult r;
  r.files.push_back(path_in(dir, "decay.csv"));
  d.series.write_csv(r.files.back());
  std::ostringstream csv;
  csv << "scenario,certificate_rate,classification,fitted_rate,r_squared,fit_lo,fit_hi,dt\n"
      << s.name << "," << fmt_num(cert.rate) << "," << to_string(cert.classification) << ","
      << (d.fit ? fmt_num(d.fit->rate) : "nan") << "," << (d.fit ? fmt_num(d.fit->r_squared) : "nan") << ","
      << fmt_num(s.fit_lo) << "," << fmt_num(s.fit_hi) << "," << fmt_num(d.dt) << "\n";
  r.files.push_back(path_in(dir, "fit.csv"));
  write_text(r.files.back(), csv.str());
  if (config.svg && d.fit) {
    r.files.push_back(path_in(dir, "decay.svg"));
    write_decay_svg(r.files.back(), d.series, *d.fit, s.fit_lo, s.fit_hi, s.name);
  }
  r.message = s.name + ": " + fit_line(s, cert, d) + "\n";
  r.exit_code = d.fit ? 0 : 2;
  return r;
}

CommandResult cmd_hjb(const RunConfig& config) {
  const Scenario s = load(config);
  require_kind(s, ScenarioKind::Control, "hjb");
  const std::string dir = prepare_dir(config.out);
  const ControlProblem& cp = *s.control;
  const auto sols = hjb_solve(cp, s.control_x0, s.dt);
  CommandResult r;
  std::ostringstream msg;
  for (std::size_t k = 0; k < sols.size(); ++k) {
    const HjbSolution& sol = sols[k];
    r.files.push_back(path_in(dir, sols.size() == 1 ? "hjb.csv" : "hjb_" + std::to_string(k) + ".csv"));
    sol.write_csv(r.files.back());
    const ClosedLoopReport cl = closed_loop_contraction_check(cp, sol);
    msg << "x0 = [" << vec_text(sol.x0) << "]: H(t0) diag [" << vec_text(sol.H.front().diagonal()) << "], gain(t0) ["
        << vec_text(Eigen::Map<const Vec>(sol.gain.front().data(), sol.gain.front().size())) << "], cost "
        << fmt_num(sol.cost) << ", shooting residual " << fmt_num(sol.shooting_residual) << ", closed-loop rate "
        << fmt_num(cl.rate) << " (" << to_string(cl.classification) << ")\n";
    if (sol.convexity_lost) {
      msg << "convexity lost at t = " << fmt_num(sol.lost_at.value_or(0.0)) << "\n";
      r.exit_code = 2;
    }
  }
  if (cp.A && cp.B && cp.cost) {
    const Vec zero = Vec::Zero(cp.n_state);
    const LqOracle o = lq_oracle(cp.A, cp.B(cp.t_f), cp.cost->state_weight, cp.cost->control_weight,
                                 cp.terminal_hessian(zero), cp.t_f - cp.t0, s.dt);
    std::ofstream os = open_output(path_in(dir, "lq_oracle.csv"));
    os << "t";
    for (int i = 0; i < cp.n_state; ++i)
      for (int j = 0; j < cp.n_state; ++j) os << ",P_" << i << j;
    os << "\n";
    for (std::size_t k = 0; k < o.t.size(); ++k) {
      os << fmt_num(o.t[k]);
      for (int i = 0; i < cp.n_state; ++i)
        for (int j = 0; j < cp.n_state; ++j) os << "," << fmt_num(o.P[k](i, j));
      os << "\n";
    }
    r.files.push_back(path_in(dir, "lq_oracle.csv"));
  }
  r.message = msg.str();
  return r;
}

CommandResult cmd_observe(const RunConfig& config) {
  const Scenario s = load(config);
  const std::string dir = prepare_dir(config.out);
  CommandResult r;
  std::ostringstream msg;
  if (s.kind == ScenarioKind::Estimation) {
    const ObserverOutputs o = observe_linear(s);
    r.files = {path_in(dir, "observer.csv"), path_in(dir, "kalman.csv"), path_in(dir, "measurements.csv")};
    o.run.write_csv(r.files[0]);
    o.oracle.write_csv(r.files[1], o.C, s.observer->measurement_weight);
    s.measurements.write_csv(r.files[2]);
    msg << s.name << ": final estimate [" << vec_text(o.run.estimates.back().x_hat) << "], error "
        << fmt_num(o.final_error) << ", max gap to Kalman-Bucy oracle " << fmt_num(o.max_gap) << "\n";
  } else if (s.kind == ScenarioKind::Pde && !s.error_pairs.empty()) {
    const Certificate cert = s.certificate();
    const Decay d = decay_of(s, false);
    r.files.push_back(path_in(dir, "observer_error.csv"));
    d.series.write_csv(r.files.back());
    msg << s.name << ": observer error squared norm " << fmt_num(d.series.d2.front()) << " -> "
        << fmt_num(d.series.d2.back()) << "; " << fit_line(s, cert, d) << "\n";
    if (config.svg && d.fit) {
      r.files.push_back(path_in(dir, "observer_error.svg"));
      write_decay_svg(r.files.back(), d.series, *d.fit, s.fit_lo, s.fit_hi, s.name);
    }
    if (!d.fit) r.exit_code = 2;
  } else {
    throw Error(ErrorCode::ConfigError, "command observe does not apply to scenario " + s.name);
  }
  r.message = msg.str();
  return r;
}

CommandResult cmd_galerkin(const RunConfig& config) {
  const Scenario s = load(config);
  require_kind(s, ScenarioKind::Pde, "galerkin");
  if (s.certificate_only) throw Error(ErrorCode::ConfigError, "scenario " + s.name + " is certificate-only");
  const std::string dir = prepare_dir(config.out);
  const int modes = config.modes > 0 ? config.modes : s.galerkin_modes;
  const int n = s.problem.n_state;
  BasisSet basis(s.grid, n, sine_modes(s.grid, n, modes));
  check_basis_boundary(basis, s.bounds, s.t0);
  const Vec a1 = project_field(basis, s.inits.at(0), s.t0);
  const Vec a2 = s.inits.size() > 1 ? project_field(basis, s.inits[1], s.t0) : Vec::Zero(a1.size()).eval();
  const double dt = config.dt ? *config.dt : (s.t1 - s.t0) / 1000.0;
  BasisSet started = basis;
  started.set_coefficients(a1);
  const GalerkinTrajectory tr = galerkin_run(s.problem, started, s.bounds, s.t0, s.t1, dt);
  const DecaySeries series = galerkin_perturbation(s.problem, basis, s.bounds, a1, a2, s.t0, s.t1, dt);
  CommandResult r;
  r.files = {path_in(dir, "galerkin.csv"), path_in(dir, "galerkin_decay.csv")};
  tr.write_csv(r.files[0]);
  series.write_csv(r.files[1]);
  std::ostringstream msg;
  msg << s.name << ": " << modes << " modes";
  try {
    const RateFit f = fit_rate(series, s.fit_lo, s.fit_hi);
    msg << ", fitted coefficient rate " << fmt_num(f.rate) << " (r^2 " << fmt_num(f.r_squared) << ")";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateSeries) throw;
    msg << ", degenerate series: " << e.what();
    r.exit_code = 2;
  }
  msg << "\n";
  r.message = msg.str();
  return r;
}

CommandResult cmd_suite(const RunConfig& config) {
  const std::string dir = prepare_dir(config.out);
  CommandResult r;
  std::ostringstream certs, rates, msg;
  certs << "scenario," << Certificate::csv_header() << ",expected_classification,expected_rate\n";
  rates << "scenario,certificate_rate,fitted_rate,r_squared,fit_lo,fit_hi,dt\n";
  for (const std::string& name : scenario_names()) {
    if (!config.scenario.empty() && name != config.scenario) continue;
    RunConfig c = config;
    c.scenario = name;
    c.params = config.scenario == name ? config.params : json::object();
    c.grid = config.scenario == name ? config.grid : json::object();
    const Scenario s = load(c);
    if (s.kind == ScenarioKind::Pde) {
      const Certificate cert = s.certificate();
      certs << name << "," << cert.csv_row() << "," << to_string(s.expected.classification) << ","
            << fmt_num(s.expected.rate) << "\n";
      msg << name << ": " << to_string(cert.classification) << " rate " << fmt_num(cert.rate);
      if (!s.certificate_only) {
        const Decay d = decay_of(s, false);
        r.files.push_back(path_in(dir, name + "_decay.csv"));
        d.series.write_csv(r.files.back());
        rates << name << "," << fmt_num(cert.rate) << "," << (d.fit ? fmt_num(d.fit->rate) : "nan") << ","
              << (d.fit ? fmt_num(d.fit->r_squared) : "nan") << "," << fmt_num(s.fit_lo) << ","
              << fmt_num(s.fit_hi) << "," << fmt_num(d.dt) << "\n";
        if (d.fit) msg << ", fitted " << fmt_num(d.fit->rate);
      }
      msg << "\n";
    } else if (s.kind == ScenarioKind::Control) {
      const auto sols = hjb_solve(*s.control, s.control_x0, s.dt);
      r.files.push_back(path_in(dir, name + "_hjb.csv"));
      sols.front().write_csv(r.files.back());
      msg << name << ": H(t0) diag [" << vec_text(sols.front().H.front().diagonal()) << "]\n";
    } else {
      const ObserverOutputs o = observe_linear(s);
      r.files.push_back(path_in(dir, name + "_observer.csv"));
      o.run.write_csv(r.files.back());
      msg << name << ": final estimate error " << fmt_num(o.final_error) << ", gap to oracle " << fmt_num(o.max_gap)
          << "\n";
    }
  }
  r.files.push_back(path_in(dir, "suite_certificates.csv"));
  write_text(r.files.back(), certs.str());
  r.files.push_back(path_in(dir, "suite_rates.csv"));
  write_text(r.files.back(), rates.str());
  r.message = msg.str();
  return r;
}

CommandResult run_command(const RunConfig& config) {
  try {
    if (config.command == "analyze") return cmd_analyze(config);
    if (config.command == "simulate") return cmd_simulate(config);
    if (config.command == "perturb") return cmd_perturb(config);
    if (config.command == "hjb") return cmd_hjb(config);
    if (config.command == "observe") return cmd_observe(config);
    if (config.command == "galerkin") return cmd_galerkin(config);
    if (config.command == "suite") return cmd_suite(config);
    throw Error(ErrorCode::ConfigError, "unknown command '" + config.command + "'");
  } catch (const Error& e) {
    return {1, std::string("error: ") + e.what() + "\n", {}};
  }
}

std::string describe(const std::string& command, const std::string& scenario) {
  static const std::map<std::string, std::string> what = {
      {"analyze", "certificate report (certificate.txt, certificate.csv); exit 2 when inconclusive"},
      {"simulate", "method-of-lines run of the first initial state (trajectory.csv)"},
      {"perturb", "two runs and the fitted decay rate of their distance (decay.csv, fit.csv, decay.svg)"},
      {"hjb", "optimal control along characteristics (hjb.csv, lq_oracle.csv for linear plants)"},
      {"observe", "optimal observer (observer.csv, kalman.csv) or PDE observer error (observer_error.csv)"},
      {"galerkin", "sine-mode Galerkin run (galerkin.csv, galerkin_decay.csv)"},
      {"suite", "every scenario with default parameters (suite_*.csv)"}};
  std::ostringstream os;
  if (!command.empty()) {
    auto it = what.find(command);
    if (it == what.end()) throw Error(ErrorCode::ConfigError, "unknown command '" + command + "'");
    os << command << ": " << it->second << "\n";
  }
  os << "config keys (JSON):\n"
     << "  command   string   one of analyze, simulate, perturb, hjb, observe, galerkin, suite\n"
     << "  scenario  string   scenario name\n"
     << "  params    object   scenario parameters (see below)\n"
     << "  grid      object   overrides for nodes, length, side or size\n"
     << "  time      object   t1 (horizon) and dt (step)\n"
     << "  out       string   output directory (default \"out\")\n"
     << "  seed      integer  seed for randomized initial states\n"
     << "  options   object   svg (bool), identical_inits (bool), snapshot_every (int), modes (int)\n";
  if (!scenario.empty()) {
    os << describe_scenario(scenario);
  } else {
    os << "scenarios:";
    for (const auto& n : scenario_names()) os << " " << n;
    os << "\n";
  }
  return os.str();
}

}  // namespace contraction
