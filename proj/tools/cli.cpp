#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "efhc/config.hpp"
#include "efhc/verify.hpp"

namespace efhc::cli {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

}  // namespace

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    grid.push_back(std::stod(item));
  }
  if (grid.empty()) throw std::runtime_error("empty connectivity grid: " + csv);
  return grid;
}

ExperimentConfig load_config(const Options& opts) {
  ExperimentConfig cfg = parse_config(opts.config_path);
  if (opts.policy_override) cfg.policy = *opts.policy_override;
  if (opts.seed_override) {
    cfg.seed_topology = derive_seed(*opts.seed_override, 1);
    cfg.seed_data = derive_seed(*opts.seed_override, 2);
    cfg.seed_policy = derive_seed(*opts.seed_override, 3);
    cfg.seed_sgd = derive_seed(*opts.seed_override, 4);
  }
  if (opts.runs_override) cfg.monte_carlo_runs = *opts.runs_override;
  return cfg;
}

int cmd_run(const Options& opts) {
  const ExperimentConfig cfg = load_config(opts);
  ensure_dir(opts.out_dir);

  const RunResult res = run_experiment(cfg);

  {
    std::ofstream csv(opts.out_dir + "/metrics.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write metrics.csv under " + opts.out_dir);
    write_metrics_csv(csv, res.records);
  }

  const MetricsRecord& last = res.records.back();
  std::ofstream sum(opts.out_dir + "/summary.txt", std::ios::binary);
  if (!sum) throw std::runtime_error("cannot write summary.txt under " + opts.out_dir);
  sum << "policy: " << to_string(cfg.policy) << "\n"
      << "iterations: " << cfg.total_iterations << "\n"
      << "records: " << res.records.size() << "\n"
      << "final_accuracy: " << fmt(last.mean_accuracy) << "\n"
      << "final_global_loss: " << fmt(last.global_loss) << "\n"
      << "consensus_max: " << fmt(last.consensus_max) << "\n"
      << "consensus_mean: " << fmt(last.consensus_mean) << "\n"
      << "cumulative_score: " << fmt(last.score_cum) << "\n"
      << "wbar_recursion_residual_max: " << fmt(res.max_wbar_residual) << "\n"
      << "empirical_b2: " << res.intercom.empirical_b2 << "\n"
      << "implied_b: " << res.intercom.implied_b << "\n";
  if (cfg.task == TaskKind::Quadratic) {
    const OracleResult oracle = centralized_oracle(res.world.task, res.world.shards, 1e-10);
    const Vec wbar = [&] {
      Vec m(res.world.devices[0].w.size(), 0.0);
      for (const DeviceState& d : res.world.devices) axpy(1.0, d.w, m);
      scale(m, 1.0 / static_cast<double>(res.world.devices.size()));
      return m;
    }();
    const double gap = global_loss(res.world.task, wbar, res.world.shards) - oracle.loss;
    sum << "optimality_gap: " << fmt(gap) << "\n";
  }
  std::cout << "wrote " << opts.out_dir << "/metrics.csv (" << res.records.size() << " rows) and "
            << opts.out_dir << "/summary.txt\n";
  return 0;
}

int cmd_sweep(const Options& opts) {
  const ExperimentConfig cfg = load_config(opts);
  ensure_dir(opts.out_dir);

  std::vector<double> grid = opts.connectivity_grid;
  if (grid.empty()) grid = {cfg.connectivity};

  std::vector<PolicyKind> policies;
  if (opts.policy_override) {
    policies = {*opts.policy_override};
  } else {
    policies = {PolicyKind::EFHC, PolicyKind::ZT, PolicyKind::GT, PolicyKind::RG};
  }

  const int runs = cfg.monte_carlo_runs;
  const std::vector<SweepRow> rows = monte_carlo(cfg, runs, grid, policies, opts.threads);

  std::ofstream csv(opts.out_dir + "/sweep.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write sweep.csv under " + opts.out_dir);
  write_sweep_csv(csv, rows);
  std::cout << "wrote " << opts.out_dir << "/sweep.csv (" << rows.size() << " rows, " << runs
            << " runs each)\n";
  return 0;
}

int cmd_verify(std::ostream& out) {
  const VerificationSuite suite = run_verification_suite(VerificationOptions{});
  print_verification(out, suite);
  return suite.ok() ? 0 : 1;
}

}  // namespace efhc::cli
