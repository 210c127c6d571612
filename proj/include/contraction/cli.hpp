#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace contraction {

// A run description: the config file holds the same keys as to_json().
struct RunConfig {
  std::string command = "analyze";
  std::string scenario;
  nlohmann::json params = nlohmann::json::object();
  nlohmann::json grid = nlohmann::json::object();  // nodes / length / side / size overrides
  std::optional<double> t1;
  std::optional<double> dt;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool svg = false;
  bool identical_inits = false;  // perturb: start both runs from the same state
  int snapshot_every = 0;        // simulate: 0 keeps about 200 snapshots
  int modes = 0;                 // galerkin: 0 uses the scenario default

  [[nodiscard]] nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig read(const std::string& path);
};

struct CommandResult {
  int exit_code = 0;
  std::string message;
  std::vector<std::string> files;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"analyze", "simulate", "perturb", "hjb",
                                                 "observe", "galerkin", "suite"};
  return names;
}

// Exit codes: 0 success, 1 error, 2 inconclusive or degenerate. Library errors
// are caught and mapped to 1.
CommandResult run_command(const RunConfig& config);

CommandResult cmd_analyze(const RunConfig& config);
CommandResult cmd_simulate(const RunConfig& config);
CommandResult cmd_perturb(const RunConfig& config);
CommandResult cmd_hjb(const RunConfig& config);
CommandResult cmd_observe(const RunConfig& config);
CommandResult cmd_galerkin(const RunConfig& config);
CommandResult cmd_suite(const RunConfig& config);

// Parameter schema of a command, plus the scenario's when one is named.
std::string describe(const std::string& command, const std::string& scenario = "");

}  // namespace contraction
