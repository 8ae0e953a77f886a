#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"efhc: event-triggered decentralized federated learning simulator"};
  app.require_subcommand(1);

  efhc::cli::Options opts;
  std::string policy_str;
  std::string grid_str;
  std::uint64_t seed = 0;
  int runs = 0;

  if (const char* env = std::getenv("EFHC_THREADS")) {
    opts.threads = std::max(1, std::atoi(env));
  }

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* c = cmd->add_option("--config", opts.config_path, "experiment config (JSON)");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_dir, "output directory (default .)");
    cmd->add_option("--policy", policy_str, "policy override: efhc|zt|gt|rg");
    cmd->add_option("--seed", seed, "master seed override")->expected(1);
  };

  CLI::App* run = app.add_subcommand("run", "run one experiment, write metrics.csv + summary.txt");
  add_common(run, true);

  CLI::App* sweep =
      app.add_subcommand("sweep", "Monte Carlo sweep over connectivity x policy, write sweep.csv");
  add_common(sweep, true);
  sweep->add_option("--runs", runs, "Monte Carlo replicas (default from config)");
  sweep->add_option("--connectivity-grid", grid_str, "comma-separated connectivity values");

  CLI::App* verify = app.add_subcommand("verify", "run the standing-assumption checks");
  (void)verify;

  CLI11_PARSE(app, argc, argv);

  try {
    if (!policy_str.empty())
      opts.policy_override = efhc::policy_kind_from_string(policy_str);
    if (run->count("--seed") || sweep->count("--seed")) opts.seed_override = seed;
    if (sweep->count("--runs")) opts.runs_override = runs;
    if (!grid_str.empty()) opts.connectivity_grid = efhc::cli::parse_grid(grid_str);

    if (app.got_subcommand(run)) return efhc::cli::cmd_run(opts);
    if (app.got_subcommand(sweep)) return efhc::cli::cmd_sweep(opts);
    if (app.got_subcommand(verify)) return efhc::cli::cmd_verify(std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
