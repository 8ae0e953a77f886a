#pragma once

// Shared experiment scenarios used by the engine tests and the acceptance
// suite. Values are frozen; the suites assert against them.

#include "efhc/engine.hpp"

namespace efhc::testsup {

/// Small quadratic consensus-optimization scenario: complete 5-device graph,
/// per-device centers in U[0,1)^4, the 1/sqrt(1+k) schedule, and a guideline
/// threshold (k_agg = 2, pinned gradient bound 0.1, so r = 1000).
inline ExperimentConfig quadratic_scenario() {
  ExperimentConfig cfg;
  cfg.m = 5;
  cfg.task = TaskKind::Quadratic;
  cfg.n_features = 4;
  cfg.center_scale = 1.0;
  cfg.connectivity = 1.5;  // complete graph
  cfg.availability_prob = 1.0;
  cfg.heterogeneity = 0.0;
  cfg.policy = PolicyKind::EFHC;
  cfg.schedule = ScheduleSpec{1.0, 1.0, 0.5, 1.0};
  cfg.auto_r = true;
  cfg.k_agg = 2.0;
  cfg.l_inf = 0.1;
  cfg.q = 2.0;
  cfg.batch_size = 1;
  cfg.total_iterations = 20000;
  cfg.cadence = 500;
  cfg.seed_topology = 101;
  cfg.seed_data = 102;
  cfg.seed_policy = 103;
  cfg.seed_sgd = 104;
  return cfg;
}

/// Ten-device one-label-per-device hinge scenario with heterogeneous
/// bandwidths. The slow-start schedule (a=2, b=50, c=0.75) keeps the accuracy
/// knee mid-run, the guideline threshold (k_agg = 10, pinned bound 0.08)
/// gives r = 4000, and gaps are capped at 25 iterations.
inline ExperimentConfig hinge_scenario() {
  ExperimentConfig cfg;
  cfg.m = 10;
  cfg.task = TaskKind::Hinge;
  cfg.n_features = 64;
  cfg.classes = 10;
  cfg.per_class = 300;
  cfg.spread = 3.0;
  cfg.lambda = 1e-4;
  cfg.labels_per_device = 1;
  cfg.batch_size = 16;
  cfg.connectivity = 0.5;
  cfg.availability_prob = 1.0;
  cfg.heterogeneity = 0.4;
  cfg.policy = PolicyKind::EFHC;
  cfg.schedule = ScheduleSpec{2.0, 50.0, 0.75, 1.0};
  cfg.auto_r = true;
  cfg.k_agg = 10.0;
  cfg.l_inf = 0.08;
  cfg.force_broadcast_every = 25;
  cfg.total_iterations = 10000;
  cfg.cadence = 25;
  cfg.seed_topology = 1;
  cfg.seed_data = 2;
  cfg.seed_policy = 3;
  cfg.seed_sgd = 4;
  return cfg;
}

/// Plateau accuracy estimate: mean over the last quarter of records.
inline double plateau_accuracy(const std::vector<MetricsRecord>& recs) {
  const std::size_t start = recs.size() - std::max<std::size_t>(1, recs.size() / 4);
  double s = 0.0;
  for (std::size_t i = start; i < recs.size(); ++i) s += recs[i].mean_accuracy;
  return s / static_cast<double>(recs.size() - start);
}

/// Five-record centered moving average of the accuracy column.
inline double smoothed_accuracy(const std::vector<MetricsRecord>& recs, std::size_t i) {
  const std::size_t lo = i >= 2 ? i - 2 : 0;
  const std::size_t hi = std::min(recs.size() - 1, i + 2);
  double s = 0.0;
  for (std::size_t j = lo; j <= hi; ++j) s += recs[j].mean_accuracy;
  return s / static_cast<double>(hi - lo + 1);
}

inline double smoothed_accuracy_at_budget(const std::vector<MetricsRecord>& recs, double budget) {
  double acc = smoothed_accuracy(recs, 0);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].score_cum <= budget) acc = smoothed_accuracy(recs, i);
    else break;
  }
  return acc;
}

}  // namespace efhc::testsup
