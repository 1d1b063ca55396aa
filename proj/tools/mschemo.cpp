#include <CLI11.hpp>

#include "mschemo/cli/commands.hpp"

namespace cli = mschemo::cli;

int main(int argc, char** argv) {
  CLI::App app{"Multi-species chemotaxis laboratory"};
  app.require_subcommand(1);

  cli::CommandOptions opts;
  std::string config;
  std::uint64_t seed = 0;
  int threads = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "YAML run configuration")->check(CLI::ExistingFile);
    sub->add_option("--set", opts.overrides, "override a config value, key.path=value")->take_all();
    sub->add_option("--seed", seed, "seed for randomized checks");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "integrate one of the dynamical regimes");
  auto* duality = app.add_subcommand("duality-check", "L/J and L/F duality gaps on random fields");
  auto* bubbles = app.add_subcommand("bubble-scan", "bubble expansions and the critical-mass slope fit");
  auto* critical = app.add_subcommand("critical-mass", "critical masses of a species measure");
  auto* gradient = app.add_subcommand("gradient-check", "finite-difference check of the mean-field gradient flow");
  for (auto* sub : {simulate, duality, bubbles, critical, gradient}) add_common(sub);
  critical->add_option("--measure", opts.measure_literal,
                       "measure literal, e.g. \"[{alpha: 1, weight: 1}]\"");

  CLI11_PARSE(app, argc, argv);

  opts.config_path = config;
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--threads")) opts.threads = threads;
  }

  if (*simulate) return cli::cmd_simulate(opts);
  if (*duality) return cli::cmd_duality_check(opts);
  if (*bubbles) return cli::cmd_bubble_scan(opts);
  if (*critical) return cli::cmd_critical_mass(opts);
  return cli::cmd_gradient_check(opts);
}
