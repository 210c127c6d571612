#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "contraction/certificates.hpp"
#include "contraction/dynamics.hpp"
#include "contraction/optimal.hpp"

namespace contraction {

struct ParamDoc {
  std::string name;
  std::string type;  // "number", "integer", "string" or "array"
  nlohmann::json default_value;
  std::string doc;
};

enum class ScenarioKind { Pde, Control, Estimation };

struct Expectation {
  Classification classification = Classification::Inconclusive;
  double rate = 0.0;
  std::string formula;
};

struct Scenario {
  std::string name;
  std::string description;
  std::string provenance;
  ScenarioKind kind = ScenarioKind::Pde;
  nlohmann::json params;  // effective parameters after defaults
  std::uint64_t seed = 0;

  PdeProblem problem;
  Grid grid = Grid::line(1.0, 3);
  BoundarySpec bounds;
  std::vector<Field> inits;
  std::vector<Field> samples;  // certificate sample states
  std::vector<double> t_samples{0.0};
  std::vector<int> certificate_components;
  std::optional<MetricTransform> transform;
  Expectation expected;
  bool certificate_only = false;

  double t0 = 0.0;
  double t1 = 1.0;
  double dt = 0.0;  // 0 picks the stability limit of the inits
  double fit_lo = 0.0;
  double fit_hi = 1.0;
  int galerkin_modes = 2;

  // Observer scenarios: error field rows are (estimate − plant) for each pair.
  std::vector<std::pair<int, int>> error_pairs;
  Mat error_metric;

  std::optional<ControlProblem> control;
  std::vector<Vec> control_x0;
  std::optional<ObserverProblem> observer;
  MeasurementStream measurements;
  std::vector<Vec> true_states;  // plant samples behind `measurements`

  // The problem certificates are computed on (metric applied when set).
  [[nodiscard]] PdeProblem certificate_problem() const;
  [[nodiscard]] Certificate certificate() const;
  // Step used for simulation: `dt` if positive, else 0.99 of the stability limit.
  [[nodiscard]] double step_size() const;
  // Observer error rows for the configured pairs.
  [[nodiscard]] Field error_field(const Field& state) const;
  // ∫eᵀ·error_metric·e dV for every snapshot of a plant-plus-observer run.
  [[nodiscard]] DecaySeries error_series(const Trajectory& run) const;
};

std::vector<std::string> scenario_names();
std::vector<ParamDoc> scenario_params(const std::string& name);
std::string describe_scenario(const std::string& name);

// Builds a scenario; unknown keys or out-of-range values raise BadParams.
Scenario load_scenario(const std::string& name, const nlohmann::json& params = nlohmann::json::object(),
                       std::uint64_t seed = 0);

// Deterministic uniform draws in [0, 1) independent of the standard library's distributions.
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : state_(seed) {}
  double next();

 private:
  std::uint64_t state_;
};

// Gauss-Legendre nodes and weights on [−1, 1].
void gauss_legendre(int points, Vec& nodes, Vec& weights);

}  // namespace contraction
