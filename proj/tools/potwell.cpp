#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "potwell/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Potential-well experiments for a nonlocal parabolic equation"};
  app.require_subcommand(1);

  std::string config_path, out_dir, u0, which;
  std::optional<std::uint64_t> seed;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--out", out_dir, "output directory (must exist)");
    sub->add_option("--seed", seed, "64-bit seed, overrides the config");
  };
  CLI::App* well = app.add_subcommand("well", "estimate C* and tabulate d(delta)");
  common(well);
  CLI::App* sim = app.add_subcommand("simulate", "integrate the flow from one initial field");
  common(sim);
  sim->add_option("--u0", u0, "checkpoint path or builtin:scaled-maximizer:<s>")->required();
  CLI::App* exp = app.add_subcommand("experiment", "run one of the dichotomy, vacuum or rate experiments");
  common(exp);
  exp->add_option("which", which, "vacuum, threshold, rates or critical")
      ->check(CLI::IsMember({"vacuum", "threshold", "rates", "critical"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : potwell::exit_code::operational;
  }

  potwell::SimConfig cfg;
  try {
    if (!config_path.empty()) cfg = potwell::load_config(config_path);
    if (seed) {
      cfg.seed = *seed;
      cfg.optimizer.seed = *seed;
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (which.empty()) which = cfg.experiment;
  } catch (const std::exception& e) {
    std::cerr << "potwell: " << e.what() << "\n";
    return potwell::exit_code::operational;
  }

  if (*well) return potwell::cmd_well(cfg, std::cerr);
  if (*sim) return potwell::cmd_simulate(cfg, u0, std::cerr);
  return potwell::cmd_experiment(cfg, which, std::cerr);
}
