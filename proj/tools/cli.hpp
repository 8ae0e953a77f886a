#pragma once

#include <optional>
#include <string>
#include <vector>

#include "efhc/engine.hpp"

namespace efhc::cli {

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<PolicyKind> policy_override;
  std::optional<std::uint64_t> seed_override;  // master seed, fans out to all four streams
  std::optional<int> runs_override;
  std::vector<double> connectivity_grid;
  int threads = 1;  // sweep replica parallelism (EFHC_THREADS)
};

/// Applies CLI overrides on top of a parsed config.
ExperimentConfig load_config(const Options& opts);

/// Runs one experiment and writes metrics.csv and summary.txt under out_dir.
int cmd_run(const Options& opts);

/// Runs the Monte Carlo sweep and writes sweep.csv under out_dir.
int cmd_sweep(const Options& opts);

/// Runs the standing-assumption verification suite; nonzero exit on failure.
int cmd_verify(std::ostream& out);

std::vector<double> parse_grid(const std::string& csv);

}  // namespace efhc::cli
