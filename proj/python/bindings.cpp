#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "contraction/cli.hpp"
#include "contraction/galerkin.hpp"
#include "contraction/scenarios.hpp"

namespace py = pybind11;
using namespace contraction;
using nlohmann::json;

namespace {

json parse(const std::string& text) { return text.empty() ? json::object() : json::parse(text); }

py::dict decay_dict(const DecaySeries& s, const std::optional<RateFit>& fit) {
  py::dict d;
  d["t"] = s.times;
  d["d2"] = s.d2;
  if (fit) {
    d["rate"] = fit->rate;
    d["r_squared"] = fit->r_squared;
  }
  return d;
}

std::optional<RateFit> try_fit(const DecaySeries& s, double lo, double hi) {
  try {
    return fit_rate(s, lo, hi);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateSeries) throw;
    return std::nullopt;
  }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Contraction certificates and simulations for distributed systems";

  static py::exception<Error> error(m, "ContractionError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    } catch (const json::exception& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });

  py::enum_<Classification>(m, "Classification")
      .value("contracting", Classification::Contracting)
      .value("semi_contracting", Classification::SemiContracting)
      .value("indifferent", Classification::Indifferent)
      .value("inconclusive", Classification::Inconclusive);

  py::class_<Certificate>(m, "Certificate")
      .def_readonly("lambda_V", &Certificate::lambda_V)
      .def_readonly("diffusion_bound", &Certificate::diffusion_bound)
      .def_readonly("rate", &Certificate::rate)
      .def_readonly("classification", &Certificate::classification)
      .def_readonly("samples", &Certificate::samples)
      .def("report", &Certificate::report)
      .def("__repr__", [](const Certificate& c) {
        return "<Certificate " + to_string(c.classification) + " rate=" + std::to_string(c.rate) + ">";
      });

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def_readonly("description", &Scenario::description)
      .def_property_readonly("kind", [](const Scenario& s) {
        return s.kind == ScenarioKind::Pde ? "pde" : s.kind == ScenarioKind::Control ? "control" : "estimation";
      })
      .def_property_readonly("params", [](const Scenario& s) { return s.params.dump(); })
      .def_property_readonly("expected_classification", [](const Scenario& s) { return s.expected.classification; })
      .def_property_readonly("expected_rate", [](const Scenario& s) { return s.expected.rate; })
      .def_property_readonly("nodes", [](const Scenario& s) { return s.grid.size(); })
      .def_readonly("t1", &Scenario::t1)
      .def_readonly("certificate_only", &Scenario::certificate_only)
      .def("certificate", &Scenario::certificate)
      .def("step_size", &Scenario::step_size)
      .def("psd_check", [](const Scenario& s) {
        const auto r = upwind_psd_check(s.problem, s.grid, s.bounds, s.t0);
        return py::make_tuple(r.is_psd, r.min_eig);
      })
      .def("initial_state", [](const Scenario& s, int k) { return Mat(s.inits.at(k).values); }, py::arg("index") = 0)
      .def(
          "perturb",
          [](const Scenario& s) {
            const Discretization disc(s.problem, s.grid, s.bounds);
            const double dt = s.step_size();
            DecaySeries series;
            if (!s.error_pairs.empty()) {
              series = s.error_series(run(disc, s.inits.at(0), s.t0, s.t1, dt));
            } else {
              const Field& b = s.inits.size() > 1 ? s.inits[1] : s.inits[0];
              series = perturbation_experiment(disc, s.inits.at(0), b, s.t0, s.t1, dt,
                                               s.transform ? s.transform->metric() : Mat());
            }
            return decay_dict(series, try_fit(series, s.fit_lo, s.fit_hi));
          },
          "Distance between two runs (or observer error) with its fitted norm rate")
      .def(
          "galerkin",
          [](const Scenario& s, int modes, double dt) {
            const int n = s.problem.n_state;
            BasisSet basis(s.grid, n, sine_modes(s.grid, n, modes));
            const Vec a1 = project_field(basis, s.inits.at(0), s.t0);
            const Vec a2 = s.inits.size() > 1 ? project_field(basis, s.inits[1], s.t0) : Vec::Zero(a1.size()).eval();
            const double step = dt > 0 ? dt : (s.t1 - s.t0) / 1000.0;
            const auto series = galerkin_perturbation(s.problem, basis, s.bounds, a1, a2, s.t0, s.t1, step);
            return decay_dict(series, try_fit(series, s.fit_lo, s.fit_hi));
          },
          py::arg("modes"), py::arg("dt") = 0.0)
      .def("hjb", [](const Scenario& s) {
        if (!s.control) throw Error(ErrorCode::BadParams, "not a control scenario");
        const auto sols = hjb_solve(*s.control, s.control_x0, s.dt);
        py::list out;
        for (const auto& sol : sols) {
          py::dict d;
          d["t"] = sol.t;
          d["x"] = sol.x;
          d["u"] = sol.u;
          d["H"] = sol.H;
          d["cost"] = sol.cost;
          d["closed_loop_rate"] = closed_loop_contraction_check(*s.control, sol).rate;
          out.append(d);
        }
        return out;
      })
      .def("observe", [](const Scenario& s) {
        if (!s.observer) throw Error(ErrorCode::BadParams, "not an estimation scenario");
        const ObserverRun r = run_observer(*s.observer, s.measurements, s.t0, s.t1, s.dt);
        py::dict d;
        std::vector<double> t;
        std::vector<Vec> x;
        std::vector<Mat> pi;
        for (const auto& e : r.estimates) {
          t.push_back(e.t);
          x.push_back(e.x_hat);
          pi.push_back(e.Pi);
        }
        d["t"] = t;
        d["x_hat"] = x;
        d["Pi"] = pi;
        d["x_true"] = s.true_states;
        return d;
      });

  m.def("scenario_names", &scenario_names);
  m.def("describe_scenario", &describe_scenario);
  m.def(
      "_load_scenario",
      [](const std::string& name, const std::string& params, std::uint64_t seed) {
        return load_scenario(name, parse(params), seed);
      },
      py::arg("name"), py::arg("params") = "", py::arg("seed") = 0);
  m.def(
      "lq_riccati",
      [](const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& P_f, double horizon, double dt) {
        const LqOracle o = lq_oracle(A, B, Q, R, P_f, horizon, dt);
        return py::make_tuple(o.t, o.P);
      },
      "Backward Riccati solution (t descending, P)");
  m.def(
      "_run_command",
      [](const std::string& config) {
        const CommandResult r = run_command(RunConfig::from_json(parse(config)));
        return py::make_tuple(r.exit_code, r.message, r.files);
      },
      py::arg("config"));
}
