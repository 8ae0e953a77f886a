#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "efhc/learning.hpp"
#include "efhc/mixing.hpp"
#include "efhc/policies.hpp"
#include "efhc/protocol.hpp"
#include "efhc/topology.hpp"

namespace efhc {

enum class InitKind { Zeros, Random };

/// Full description of one experiment. Field defaults mirror the default
/// config file shipped with the CLI.
struct ExperimentConfig {
  int m = 10;
  long total_iterations = 1000;
  long cadence = 10;  // evaluate accuracy/loss every this many iterations
  int monte_carlo_runs = 5;
  double transmission_budget = 0.0;  // <= 0 selects an automatic budget

  PolicyKind policy = PolicyKind::EFHC;

  // topology
  double connectivity = 0.4;
  double availability_prob = 1.0;

  // task and data
  TaskKind task = TaskKind::Hinge;
  int n_features = 64;
  int classes = 10;
  double lambda = 1e-4;
  int per_class = 100;
  double spread = 1.0;
  double center_scale = 1.0;  // quadratic tasks: centers in scale * U[0,1)^n
  int labels_per_device = 1;
  int batch_size = 16;

  // schedule
  ScheduleSpec schedule;

  // threshold; auto_r derives r from r_guideline using k_agg and l_inf
  // (l_inf <= 0 means estimate it from the data)
  double r = 50.0;
  double q = 2.0;
  bool auto_r = false;
  double k_agg = 10.0;
  double l_inf = 0.0;
  int linf_samples = 64;

  // bandwidth heterogeneity
  double heterogeneity = 0.4;
  double average_bandwidth = 5000.0;
  double weak_bandwidth = 1000.0;

  // seeds
  std::uint64_t seed_topology = 1;
  std::uint64_t seed_data = 2;
  std::uint64_t seed_policy = 3;
  std::uint64_t seed_sgd = 4;

  // initialization
  InitKind init = InitKind::Zeros;
  double init_scale = 1.0;

  // diagnostics and monitors
  bool zero_gradients = false;
  bool record_trace = false;
  bool runtime_checks = false;
  int b1_window = 1;
  long b2_budget = 0;              // 0: report only, no budget to check
  long force_broadcast_every = 0;  // > 0: force v_i = 1 when the gap reaches this

  void validate() const;
};

/// One metrics row. The CSV schema is the fixed column set
/// k,mean_accuracy,global_loss,consensus_max,consensus_mean,score_iter,score_cum,n_broadcasts;
/// the remaining fields are diagnostics kept in memory.
struct MetricsRecord {
  long k = 0;
  double mean_accuracy = 0.0;
  double global_loss = 0.0;  // per-point mean reduction at w_bar
  double consensus_max = 0.0;
  double consensus_mean = 0.0;
  double score_iter = 0.0;
  double score_cum = 0.0;
  int n_broadcasts = 0;
  double wbar_residual = 0.0;   // |w_bar recursion defect| this iteration
  double wbar_drift = 0.0;      // ||w_bar(k) - w_bar(0)||_2
  double mean_interval = 0.0;   // mean per-device broadcast interval so far
  long max_interval = 0;        // largest per-device broadcast gap so far
  std::vector<std::uint8_t> broadcast_flags;
};

/// Optional per-iteration trace for oracle-style tests.
struct RunTrace {
  std::vector<GraphSnapshot> snapshots;
  std::vector<BroadcastFlags> flags;
  std::vector<MixingMatrix> matrices;
  std::vector<std::vector<Vec>> states;  // states[k] = device parameters before step k
};

/// Splits devices into floor(H*m) weak ones at weak_bw and the rest at
/// (avg_bw - weak_bw*H)/(1-H), so the network mean is avg_bw whenever H*m is
/// an integer. Warns on *warn when H*m is fractional.
std::vector<double> assign_bandwidths(int m, double heterogeneity, double average_bw,
                                      double weak_bw, std::uint64_t seed,
                                      std::ostream* warn = nullptr);

/// Outgoing-link utilization score of one device: (links_used/degree)*rho*n.
double device_score_term(int links_used, int degree, double rho, int n);

/// Mean over devices of device_score_term given the realized information
/// flow. Isolated devices contribute zero.
double resource_score(std::span<const Edge> info_edges, const GraphSnapshot& snapshot,
                      std::span<const double> rho, int n);

/// (max_i, mean_i) of ||w_i - w_bar||_2.
std::pair<double, double> consensus_error(std::span<const Vec> ws);

/// Gap statistics of an event trace (rows = iterations, columns = devices).
/// Gaps are differences between consecutive event iterations per device,
/// including the leading gap from the start; a device with no events at all
/// has one gap equal to the trace length.
struct IntercomReport {
  std::vector<long> max_gap;          // per device
  long empirical_b2 = 0;              // max over devices
  int l = 0;                          // integer with l*B1 < B2 <= (l+1)*B1
  long implied_b = 0;                 // (l+2)*B1
  std::vector<int> violators;         // devices whose max gap exceeds the budget
  std::vector<std::vector<long>> gaps;  // per device, completed gaps
};

IntercomReport intercom_monitor(const std::vector<std::vector<std::uint8_t>>& event_trace,
                                int b1_window = 1, long b2_budget = 0);

/// Mean event gap per quarter of the trace. A gap is attributed to the
/// quarter in which it ends; quarters without any completed gap report the
/// quarter length.
std::vector<double> quarterly_mean_intervals(
    const std::vector<std::vector<std::uint8_t>>& event_trace, int quarters = 4);

/// Live simulation state. Built by init_world, advanced by step.
struct World {
  ExperimentConfig cfg;
  TaskSpec task;
  std::vector<Shard> shards;
  Shard test_shard;  // empty for quadratic tasks
  TopologyProcess topo;
  std::vector<DeviceState> devices;
  Policy policy;
  ThresholdSpec threshold;  // with resolved r
  ScheduleSpec schedule;
  GraphSnapshot prev_snapshot;

  double score_cum = 0.0;
  Vec wbar0;
  double max_wbar_residual = 0.0;
  std::vector<std::vector<std::uint8_t>> v_trace;             // broadcasts
  std::vector<std::vector<std::uint8_t>> participation_trace; // any exchange
  std::vector<long> last_broadcast;  // iteration of last v_i = 1, -1 if none
  std::vector<long> broadcast_count;
  std::vector<long> max_broadcast_gap;
  RunTrace trace;
};

World init_world(const ExperimentConfig& cfg);

/// Advances one iteration: snapshot + connection events, broadcast flags,
/// auxiliary resets, one consensus step with the transition matrix, then an
/// SGD step on gradients taken at the pre-consensus parameters. Accuracy and
/// loss are computed only when evaluate is set.
MetricsRecord step(World& world, long k, bool evaluate);

/// Metrics of the current state without advancing (k reported as given).
MetricsRecord evaluate_record(const World& world, long k);

struct RunResult {
  std::vector<MetricsRecord> records;
  IntercomReport intercom;
  double max_wbar_residual = 0.0;
  World world;  // final state; shards/task/rho stay accessible to callers
};

RunResult run_experiment(const ExperimentConfig& cfg);

/// Accuracy at the last record whose cumulative score is within the budget
/// (the first record's accuracy if none is).
double accuracy_at_budget(std::span<const MetricsRecord> records, double budget);

/// Replica config used by Monte Carlo sweeps: seeds are derived from the
/// replica index only, so different policies at the same replica share
/// topology/data/init draws (paired comparisons).
ExperimentConfig derive_replica_config(const ExperimentConfig& base, double connectivity,
                                       PolicyKind policy, int replica);

struct SweepRow {
  double connectivity = 0.0;
  PolicyKind policy = PolicyKind::EFHC;
  int runs = 0;
  double acc_at_budget = 0.0;
  double final_acc = 0.0;
  double cum_score = 0.0;
  double budget = 0.0;
};

/// Paired Monte Carlo over a connectivity grid and policy set. The budget
/// per (connectivity, replica) is the configured transmission budget, or,
/// when unset, the smallest final cumulative score among the policies so
/// every curve reaches it. Rows are averaged over replicas.
std::vector<SweepRow> monte_carlo(const ExperimentConfig& base, int runs,
                                  std::span<const double> connectivity_grid,
                                  std::span<const PolicyKind> policies, int threads = 1);

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> records);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace efhc
