#pragma once

#include "liebridge/sde_simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace liebridge {

// Config parsing failure carrying the offending 1-based line number.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct EndpointSpec {
  std::string family = "von_mises";  // von_mises | uniform
  double kappa0 = 1.0;
  double loc0 = 1.0;  // so2: mean angle; so3: mean rotation angle in (0, pi]
  double kappa1 = 1.0;
  double loc1 = 2.0;
};

struct SimulateSpec {
  bool enabled = false;
  std::size_t n_particles = 100000;
  int n_steps = 200;
  std::uint64_t seed = 1;
};

// Flat key-value config with [problem] [endpoints] [solver] [output]
// [simulate] sections; every field has a default, so an empty string parses.
struct ExperimentConfig {
  GroupId group = GroupId::so2;
  std::size_t grid_size = 512;
  double sigma = 1.0;
  int truncation = 0;  // 0 = group default (N/2 on so2, 60 on so3)

  EndpointSpec endpoints;

  double tol = 1e-10;
  int max_iter = 500;

  std::string directory = "out";
  int time_samples = 21;

  SimulateSpec simulate;
};

// Parses config text; unknown sections/keys, malformed numbers and
// out-of-range values raise ConfigError with the line number.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical text form; parse_config(serialize_config(c)) reproduces c
// exactly (doubles at 17 significant digits).
std::string serialize_config(const ExperimentConfig& config);

struct RunOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool validate_only = false;
};

// Executes solve -> bridge -> optional simulation, writing density_t*.csv,
// control_t*.csv, convergence.csv, solution.svg and report.json into the
// output directory.  Returns 0 on success, 2 when the solver does not
// converge (convergence trace and report are still written).  Config
// semantics and runtime failures throw; the CLI maps exceptions to exit 1.
// With validate_only the invariant suite runs instead (nothing written):
// returns 0 when every invariant holds, 1 otherwise.
int run_experiment(const ExperimentConfig& config, const RunOverrides& overrides = {});

}  // namespace liebridge
