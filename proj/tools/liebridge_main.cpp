#include "liebridge/experiment.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"liebridge: Schrodinger bridges on SO(2) and SO(3)"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "solve a bridge experiment from a config file");
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool validate_only = false;
  run->add_option("--config", config_path, "experiment config file")->required();
  CLI::Option* out_opt = run->add_option("--out", out_dir, "output directory (overrides config)");
  CLI::Option* seed_opt = run->add_option("--seed", seed, "simulation seed (overrides config)");
  run->add_flag("--validate-only", validate_only,
                "run the invariant suite and exit (no solve, nothing written)");

  CLI11_PARSE(app, argc, argv);

  try {
    const liebridge::ExperimentConfig config = liebridge::load_config(config_path);
    liebridge::RunOverrides overrides;
    if (out_opt->count() > 0) overrides.out_dir = out_dir;
    if (seed_opt->count() > 0) overrides.seed = seed;
    overrides.validate_only = validate_only;
    return liebridge::run_experiment(config, overrides);
  } catch (const std::exception& e) {
    std::cerr << "liebridge: error: " << e.what() << "\n";
    return 1;
  }
}
