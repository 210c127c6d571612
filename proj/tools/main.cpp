#include <CLI11.hpp>

#include <iostream>

#include "contraction/cli.hpp"
#include "contraction/error.hpp"

using contraction::RunConfig;

int main(int argc, char** argv) {
  CLI::App app{"Contraction certificates, simulations and optimal control/estimation for distributed systems"};
  app.require_subcommand(0, 1);

  std::string scenario, config_path, out;
  std::optional<double> dt, t1;
  std::optional<std::uint64_t> seed;
  bool describe = false, svg = false, identical = false;
  int snapshot_every = -1, modes = -1;

  for (const auto& name : contraction::command_names()) {
    const std::string text = contraction::describe(name);
    const std::size_t start = name.size() + 2;  // skip "name: "
    CLI::App* sub = app.add_subcommand(name, text.substr(start, text.find('\n') - start));
    sub->add_option("--scenario,-s", scenario, "scenario name");
    sub->add_option("--config,-c", config_path, "JSON run config; flags override it");
    sub->add_option("--out,-o", out, "output directory");
    sub->add_option("--dt", dt, "time step");
    sub->add_option("--t1", t1, "final time");
    sub->add_option("--seed", seed, "seed for randomized initial states");
    sub->add_flag("--describe", describe, "print the parameter schema and exit");
    if (name == "perturb" || name == "observe") sub->add_flag("--svg", svg, "also write an SVG decay plot");
    if (name == "perturb") sub->add_flag("--identical-inits", identical, "start both runs from the same state");
    if (name == "simulate") sub->add_option("--snapshot-every", snapshot_every, "steps between stored snapshots");
    if (name == "galerkin") sub->add_option("--modes", modes, "number of sine modes");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 0;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    if (describe) {
      std::cout << contraction::describe(command, scenario);
      return 0;
    }
    RunConfig config = config_path.empty() ? RunConfig{} : RunConfig::read(config_path);
    config.command = command;
    if (!scenario.empty()) config.scenario = scenario;
    if (!out.empty()) config.out = out;
    if (dt) config.dt = dt;
    if (t1) config.t1 = t1;
    if (seed) config.seed = *seed;
    if (svg) config.svg = true;
    if (identical) config.identical_inits = true;
    if (snapshot_every >= 0) config.snapshot_every = snapshot_every;
    if (modes >= 0) config.modes = modes;
    const auto result = contraction::run_command(config);
    (result.exit_code == 1 ? std::cerr : std::cout) << result.message;
    return result.exit_code;
  } catch (const contraction::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
