#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "contraction/cli.hpp"
#include "contraction/error.hpp"

using namespace contraction;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("contraction_cli_test_" + name);
  fs::remove_all(p);
  return p.string();
}

// column name -> values
std::map<std::string, std::vector<double>> read_csv(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is);
  std::string line;
  std::getline(is, line);
  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) names.push_back(cell);
  }
  std::map<std::string, std::vector<double>> cols;
  while (std::getline(is, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t k = 0; std::getline(ss, cell, ','); ++k) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      cols[names.at(k)].push_back(end == cell.c_str() ? std::nan("") : v);
    }
  }
  return cols;
}

RunConfig config(const std::string& command, const std::string& scenario) {
  RunConfig c;
  c.command = command;
  c.scenario = scenario;
  c.out = scratch(command + "_" + scenario);
  return c;
}

}  // namespace

TEST_CASE("config round trip") {
  RunConfig c;
  c.command = "perturb";
  c.scenario = "heat";
  c.params = {{"modes", 3}};
  c.grid = {{"nodes", 101}};
  c.t1 = 2.0;
  c.dt = 1e-4;
  c.seed = 9;
  c.svg = true;
  c.identical_inits = true;
  const RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.t1 == 2.0);
  CHECK(back.seed == 9);

  auto bad = c.to_json();
  bad["colour"] = "blue";
  CHECK_THROWS_AS(RunConfig::from_json(bad), Error);
  try {
    RunConfig::from_json(bad);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
}

TEST_CASE("analyze reports the certificate") {
  const auto r = run_command(config("analyze", "transport_compress"));
  CHECK(r.exit_code == 0);
  const auto cols = read_csv(r.files.at(1));
  CHECK(cols.at("rate").at(0) == doctest::Approx(0.5));
  CHECK(run_command(config("analyze", "bernoulli_indifferent")).exit_code == 0);
  CHECK(run_command(config("analyze", "lq_control")).exit_code == 0);
  CHECK(run_command(config("analyze", "lq_estimation")).exit_code == 0);
}

TEST_CASE("errors map to exit code 1") {
  const auto r = run_command(config("analyze", "no_such_scenario"));
  CHECK(r.exit_code == 1);
  CHECK(r.message.find("UnknownScenario") != std::string::npos);
  RunConfig c = config("hjb", "heat");
  CHECK(run_command(c).exit_code == 1);
  c = config("analyze", "heat");
  c.params = {{"nodes", -3}};
  CHECK(run_command(c).exit_code == 1);
}

TEST_CASE("perturb from identical states is degenerate") {
  RunConfig c = config("perturb", "heat");
  c.grid = {{"nodes", 51}};
  c.identical_inits = true;
  const auto r = run_command(c);
  CHECK(r.exit_code == 2);
  CHECK(r.message.find("DegenerateSeries") != std::string::npos);
}

TEST_CASE("perturb heat recovers the unit rate") {
  RunConfig c = config("perturb", "heat");
  c.svg = true;
  const auto r = run_command(c);
  REQUIRE(r.exit_code == 0);
  const auto fit = read_csv(r.files.at(1));
  CHECK(fit.at("fitted_rate").at(0) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(fs::exists(r.files.at(2)));
}

TEST_CASE("hjb gain approaches the Riccati fixed point") {
  const auto r = run_command(config("hjb", "lq_control"));
  REQUIRE(r.exit_code == 0);
  const auto cols = read_csv(r.files.at(0));
  CHECK(std::abs(cols.at("gain00").front()) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(cols.at("H00").front() == doctest::Approx(1.0).epsilon(1e-6));
  // the oracle runs backward from the terminal condition
  const auto oracle = read_csv(r.files.at(1));
  CHECK(oracle.at("P_00").front() == doctest::Approx(0.2));
  CHECK(oracle.at("P_00").back() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("observe writes observer and oracle traces") {
  const auto r = run_command(config("observe", "lq_estimation"));
  REQUIRE(r.exit_code == 0);
  const auto obs = read_csv(r.files.at(0));
  const auto kal = read_csv(r.files.at(1));
  REQUIRE(obs.at("xhat0").size() == kal.at("xhat0").size());
  for (std::size_t k = 0; k < obs.at("xhat0").size(); ++k)
    REQUIRE(obs.at("xhat0")[k] == doctest::Approx(kal.at("xhat0")[k]).epsilon(1e-6));
}

TEST_CASE("galerkin heat modes decay at k squared") {
  RunConfig c = config("galerkin", "heat");
  c.modes = 2;
  const auto r = run_command(c);
  REQUIRE(r.exit_code == 0);
  const auto cols = read_csv(r.files.at(0));
  for (int k = 0; k < 2; ++k) {
    const auto& a = cols.at("a" + std::to_string(k));
    const auto& ad = cols.at("adot" + std::to_string(k));
    const std::size_t mid = a.size() / 2;
    CHECK(-ad[mid] / a[mid] == doctest::Approx((k + 1.0) * (k + 1.0)).epsilon(1e-3));
  }
}

TEST_CASE("simulate and suite write their files") {
  RunConfig c = config("simulate", "wafer_disk");
  c.t1 = 0.5;
  auto r = run_command(c);
  CHECK(r.exit_code == 0);
  for (const auto& f : r.files) CHECK(fs::file_size(f) > 0);
  CHECK(describe("perturb", "heat").find("fit_lo") != std::string::npos);
}
