#include "efhc/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

namespace efhc {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (m < 1) throw std::invalid_argument("config: m must be >= 1");
  if (total_iterations < 0) throw std::invalid_argument("config: total_iterations must be >= 0");
  if (cadence < 1) throw std::invalid_argument("config: cadence must be >= 1");
  if (monte_carlo_runs < 1) throw std::invalid_argument("config: monte_carlo_runs must be >= 1");
  if (connectivity <= 0.0) throw std::invalid_argument("config: connectivity must be > 0");
  if (availability_prob <= 0.0 || availability_prob > 1.0)
    throw std::invalid_argument("config: availability_prob must be in (0, 1]");
  if (heterogeneity < 0.0 || heterogeneity >= 1.0)
    throw std::invalid_argument("config: heterogeneity must be in [0, 1)");
  if (average_bandwidth <= 0.0 || weak_bandwidth <= 0.0)
    throw std::invalid_argument("config: bandwidths must be > 0");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (labels_per_device < 1)
    throw std::invalid_argument("config: labels_per_device must be >= 1");
  if (lambda < 0.0) throw std::invalid_argument("config: lambda must be >= 0");
  if (b1_window < 1) throw std::invalid_argument("config: b1_window must be >= 1");
  schedule.validate();
  if (!auto_r) {
    ThresholdSpec t{r, q};
    t.validate();
  } else {
    if (k_agg <= 0.0) throw std::invalid_argument("config: k_agg must be > 0");
    if (linf_samples < 1) throw std::invalid_argument("config: linf_samples must be >= 1");
  }
}

std::vector<double> assign_bandwidths(int m, double heterogeneity, double average_bw,
                                      double weak_bw, std::uint64_t seed, std::ostream* warn) {
  if (m < 1) throw std::invalid_argument("assign_bandwidths: m must be >= 1");
  if (heterogeneity < 0.0 || heterogeneity >= 1.0)
    throw std::invalid_argument("assign_bandwidths: heterogeneity must be in [0, 1)");

  std::vector<double> bw(static_cast<std::size_t>(m), average_bw);
  if (heterogeneity == 0.0) return bw;

  const double hm = heterogeneity * static_cast<double>(m);
  const int n_weak = static_cast<int>(std::floor(hm));
  if (warn != nullptr && std::fabs(hm - std::round(hm)) > 1e-9) {
    *warn << "assign_bandwidths: H*m = " << hm
          << " is not an integer; network mean will deviate from " << average_bw << "\n";
  }
  const double powerful_bw = (average_bw - weak_bw * heterogeneity) / (1.0 - heterogeneity);

  std::vector<int> order(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng = make_rng(seed, stream::bandwidth);
  shuffle(order, rng);
  for (int i = 0; i < m; ++i)
    bw[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
        (i < n_weak) ? weak_bw : powerful_bw;
  return bw;
}

double device_score_term(int links_used, int degree, double rho, int n) {
  if (degree <= 0) return 0.0;
  return (static_cast<double>(links_used) / static_cast<double>(degree)) * rho *
         static_cast<double>(n);
}

double resource_score(std::span<const Edge> info_edges, const GraphSnapshot& snapshot,
                      std::span<const double> rho, int n) {
  if (static_cast<int>(rho.size()) != snapshot.m)
    throw std::invalid_argument("resource_score: rho sized differently than snapshot");
  std::vector<int> links(static_cast<std::size_t>(snapshot.m), 0);
  for (const Edge& e : info_edges) {
    ++links[static_cast<std::size_t>(e.a)];
    ++links[static_cast<std::size_t>(e.b)];
  }
  const std::vector<int> deg = snapshot.degrees();
  double s = 0.0;
  for (int i = 0; i < snapshot.m; ++i)
    s += device_score_term(links[static_cast<std::size_t>(i)], deg[static_cast<std::size_t>(i)],
                           rho[static_cast<std::size_t>(i)], n);
  return s / static_cast<double>(snapshot.m);
}

std::pair<double, double> consensus_error(std::span<const Vec> ws) {
  if (ws.empty()) throw std::invalid_argument("consensus_error: no devices");
  const Vec wbar = mean_of(ws);
  double mx = 0.0, mean = 0.0;
  for (const Vec& w : ws) {
    const double d = norm2(sub(w, wbar));
    mx = std::max(mx, d);
    mean += d;
  }
  return {mx, mean / static_cast<double>(ws.size())};
}

IntercomReport intercom_monitor(const std::vector<std::vector<std::uint8_t>>& event_trace,
                                int b1_window, long b2_budget) {
  IntercomReport rep;
  if (event_trace.empty()) return rep;
  const std::size_t m = event_trace[0].size();
  const long len = static_cast<long>(event_trace.size());
  rep.max_gap.assign(m, 0);
  rep.gaps.assign(m, {});

  for (std::size_t i = 0; i < m; ++i) {
    long last = -1;
    bool any = false;
    for (long t = 0; t < len; ++t) {
      if (event_trace[static_cast<std::size_t>(t)][i]) {
        rep.gaps[i].push_back(t - last);
        last = t;
        any = true;
      }
    }
    if (!any) {
      rep.gaps[i].push_back(len);
    }
    rep.max_gap[i] = *std::max_element(rep.gaps[i].begin(), rep.gaps[i].end());
  }
  rep.empirical_b2 = *std::max_element(rep.max_gap.begin(), rep.max_gap.end());
  if (b1_window >= 1 && rep.empirical_b2 >= 1) {
    rep.l = static_cast<int>((rep.empirical_b2 + b1_window - 1) / b1_window) - 1;
    rep.implied_b = static_cast<long>(rep.l + 2) * b1_window;
  }
  if (b2_budget > 0) {
    for (std::size_t i = 0; i < m; ++i)
      if (rep.max_gap[i] > b2_budget) rep.violators.push_back(static_cast<int>(i));
  }
  return rep;
}

std::vector<double> quarterly_mean_intervals(
    const std::vector<std::vector<std::uint8_t>>& event_trace, int quarters) {
  if (quarters < 1) throw std::invalid_argument("quarterly_mean_intervals: quarters must be >= 1");
  const long len = static_cast<long>(event_trace.size());
  if (len < quarters) throw std::invalid_argument("quarterly_mean_intervals: trace too short");
  const std::size_t m = event_trace.empty() ? 0 : event_trace[0].size();

  std::vector<double> sums(static_cast<std::size_t>(quarters), 0.0);
  std::vector<long> counts(static_cast<std::size_t>(quarters), 0);
  const long qlen = len / quarters;

  for (std::size_t i = 0; i < m; ++i) {
    long last = -1;
    for (long t = 0; t < len; ++t) {
      if (event_trace[static_cast<std::size_t>(t)][i]) {
        const int quarter = std::min<int>(quarters - 1, static_cast<int>(t / qlen));
        sums[static_cast<std::size_t>(quarter)] += static_cast<double>(t - last);
        ++counts[static_cast<std::size_t>(quarter)];
        last = t;
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(quarters));
  for (int qi = 0; qi < quarters; ++qi) {
    out[static_cast<std::size_t>(qi)] =
        counts[static_cast<std::size_t>(qi)] > 0
            ? sums[static_cast<std::size_t>(qi)] / static_cast<double>(counts[static_cast<std::size_t>(qi)])
            : static_cast<double>(qlen);
  }
  return out;
}

namespace {

Vec devices_mean(const std::vector<DeviceState>& devices) {
  Vec m(devices[0].w.size(), 0.0);
  for (const DeviceState& d : devices) axpy(1.0, d.w, m);
  scale(m, 1.0 / static_cast<double>(devices.size()));
  return m;
}

std::pair<double, double> devices_consensus(const std::vector<DeviceState>& devices) {
  const Vec wbar = devices_mean(devices);
  double mx = 0.0, mean = 0.0;
  for (const DeviceState& d : devices) {
    const double dist = norm2(sub(d.w, wbar));
    mx = std::max(mx, dist);
    mean += dist;
  }
  return {mx, mean / static_cast<double>(devices.size())};
}

}  // namespace

World init_world(const ExperimentConfig& cfg) {
  cfg.validate();
  World w;
  w.cfg = cfg;
  w.schedule = cfg.schedule;

  w.task = TaskSpec{cfg.task, cfg.n_features, cfg.classes,
                    cfg.task == TaskKind::Quadratic ? 0.0 : cfg.lambda};

  // Data: quadratic tasks hold one center per device, classifier tasks get a
  // non-iid split of a synthetic dataset plus a shared test set.
  if (cfg.task == TaskKind::Quadratic) {
    w.shards = make_quadratic_shards(cfg.m, cfg.n_features, cfg.center_scale, cfg.seed_data);
  } else {
    auto [train, test] = make_synthetic_classification(cfg.classes, cfg.n_features, cfg.per_class,
                                                       cfg.spread, cfg.seed_data);
    w.shards = partition_noniid(train, cfg.m, cfg.labels_per_device,
                                derive_seed(cfg.seed_data, stream::partition));
    w.test_shard = std::move(test);
  }

  // Topology process on a connected geometric base graph.
  if (cfg.m == 1) {
    w.topo.base.m = 1;
  } else {
    w.topo.base = generate_geometric_graph(cfg.m, cfg.connectivity, cfg.seed_topology);
  }
  w.topo.availability_prob = cfg.availability_prob;
  w.topo.seed = cfg.seed_topology;

  const std::vector<double> bw = assign_bandwidths(
      cfg.m, cfg.heterogeneity, cfg.average_bandwidth, cfg.weak_bandwidth, cfg.seed_topology);

  const int n = w.task.dim();
  w.devices.resize(static_cast<std::size_t>(cfg.m));
  for (int i = 0; i < cfg.m; ++i) {
    DeviceState& d = w.devices[static_cast<std::size_t>(i)];
    d.w.assign(static_cast<std::size_t>(n), 0.0);
    if (cfg.init == InitKind::Random) {
      Rng rng = make_rng(cfg.seed_sgd, stream::init, static_cast<std::uint64_t>(i));
      for (double& v : d.w) v = cfg.init_scale * (2.0 * uniform_double(rng) - 1.0);
    }
    d.w_hat = d.w;
    d.bandwidth = bw[static_cast<std::size_t>(i)];
    d.rho = 1.0 / d.bandwidth;
  }

  // Threshold: fixed r, or the guideline value from the schedule, the mean
  // of 1/rho_i, and a gradient bound (estimated unless pinned).
  double r_resolved = cfg.r;
  if (cfg.auto_r) {
    double linf = cfg.l_inf;
    if (linf <= 0.0)
      linf = estimate_gradient_bounds(w.task, w.shards, cfg.linf_samples, cfg.seed_data).linf;
    double inv_rho_mean = 0.0;
    for (double b : bw) inv_rho_mean += b;
    inv_rho_mean /= static_cast<double>(cfg.m);
    r_resolved = r_guideline(w.schedule.alpha(0), w.schedule.gamma(0), inv_rho_mean, cfg.k_agg,
                             linf);
  }
  w.threshold = ThresholdSpec{r_resolved, cfg.q};
  w.threshold.validate();

  w.policy.kind = cfg.policy;
  if (cfg.policy == PolicyKind::GT) w.policy.rho_global = 1.0 / cfg.average_bandwidth;
  if (cfg.policy == PolicyKind::RG) w.policy.gossip_prob = 1.0 / static_cast<double>(cfg.m);

  w.wbar0 = devices_mean(w.devices);
  w.last_broadcast.assign(static_cast<std::size_t>(cfg.m), -1);
  w.broadcast_count.assign(static_cast<std::size_t>(cfg.m), 0);
  w.max_broadcast_gap.assign(static_cast<std::size_t>(cfg.m), 0);
  return w;
}

MetricsRecord evaluate_record(const World& world, long k) {
  MetricsRecord rec;
  rec.k = k;
  const auto [mx, mean] = devices_consensus(world.devices);
  rec.consensus_max = mx;
  rec.consensus_mean = mean;
  rec.score_cum = world.score_cum;
  const Vec wbar = devices_mean(world.devices);
  rec.wbar_drift = norm2(sub(wbar, world.wbar0));
  rec.global_loss = global_mean_loss(world.task, wbar, world.shards);
  if (world.task.kind != TaskKind::Quadratic) {
    double acc = 0.0;
    for (const DeviceState& d : world.devices)
      acc += accuracy(world.task, d.w, world.test_shard);
    rec.mean_accuracy = acc / static_cast<double>(world.devices.size());
  }
  return rec;
}

MetricsRecord step(World& world, long k, bool evaluate) {
  const ExperimentConfig& cfg = world.cfg;
  const int m = cfg.m;
  const int n = world.task.dim();

  // (1) Physical snapshot and connection events. The first snapshot defines
  // the initial neighbor sets; afterwards every edge appearing since the
  // previous iteration forces an exchange on that link.
  GraphSnapshot snap = sample_snapshot(world.topo, k);
  std::set<Edge> forced;
  if (k == 0) {
    const auto adj = snap.adjacency();
    for (int i = 0; i < m; ++i)
      world.devices[static_cast<std::size_t>(i)].neighbors =
          std::set<int>(adj[static_cast<std::size_t>(i)].begin(), adj[static_cast<std::size_t>(i)].end());
  } else {
    std::vector<std::vector<int>> joined(static_cast<std::size_t>(m)), left(static_cast<std::size_t>(m));
    for (const Edge& e : snap.edges) {
      if (!world.prev_snapshot.has_edge(e.a, e.b)) {
        joined[static_cast<std::size_t>(e.a)].push_back(e.b);
        joined[static_cast<std::size_t>(e.b)].push_back(e.a);
      }
    }
    for (const Edge& e : world.prev_snapshot.edges) {
      if (!snap.has_edge(e.a, e.b)) {
        left[static_cast<std::size_t>(e.a)].push_back(e.b);
        left[static_cast<std::size_t>(e.b)].push_back(e.a);
      }
    }
    for (int i = 0; i < m; ++i) {
      const auto f = handle_neighbor_change(world.devices[static_cast<std::size_t>(i)], i,
                                            joined[static_cast<std::size_t>(i)],
                                            left[static_cast<std::size_t>(i)]);
      forced.insert(f.begin(), f.end());
    }
  }

  // (2) Broadcast indicators for this iteration, plus the optional forced
  // periodic broadcast used to enforce a bounded intercommunication gap.
  Rng policy_rng = make_rng(cfg.seed_policy, stream::policy, static_cast<std::uint64_t>(k));
  BroadcastFlags flags =
      compute_flags(world.policy, world.devices, k, world.threshold, world.schedule, policy_rng);
  if (cfg.force_broadcast_every > 0) {
    for (int i = 0; i < m; ++i) {
      if (k - world.last_broadcast[static_cast<std::size_t>(i)] >= cfg.force_broadcast_every)
        flags.v[static_cast<std::size_t>(i)] = 1;
    }
  }
  flags.forced_edges.assign(forced.begin(), forced.end());

  for (int i = 0; i < m; ++i) {
    if (flags.v[static_cast<std::size_t>(i)]) {
      apply_broadcast(world.devices[static_cast<std::size_t>(i)],
                      static_cast<int>(world.devices[static_cast<std::size_t>(i)].neighbors.size()));
      const long gap = k - world.last_broadcast[static_cast<std::size_t>(i)];
      world.max_broadcast_gap[static_cast<std::size_t>(i)] =
          std::max(world.max_broadcast_gap[static_cast<std::size_t>(i)], gap);
      ++world.broadcast_count[static_cast<std::size_t>(i)];
      world.last_broadcast[static_cast<std::size_t>(i)] = k;
    }
  }

  // (3) Transition matrix for the realized information flow.
  MixingMatrix P = build_transition_matrix(snap, flags);
  if (cfg.runtime_checks) {
    const TransitionReport rep = verify_transition(P, 1.0 / static_cast<double>(m));
    if (!rep.pass())
      throw std::runtime_error("transition matrix check failed at k=" + std::to_string(k) + ": " +
                               rep.summary());
  }

  if (cfg.record_trace) {
    std::vector<Vec> pre(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) pre[static_cast<std::size_t>(i)] = world.devices[static_cast<std::size_t>(i)].w;
    world.trace.snapshots.push_back(snap);
    world.trace.flags.push_back(flags);
    world.trace.matrices.push_back(P);
    world.trace.states.push_back(std::move(pre));
  }

  // Gradients are taken at the pre-consensus parameters, so the combined
  // update is w_i(k+1) = sum_j p_ij w_j(k) - alpha(k) g_i(w_i(k)).
  const double alpha = world.schedule.alpha(k);
  std::vector<Vec> grads(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    if (cfg.zero_gradients) {
      grads[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(n), 0.0);
    } else {
      const Shard& sh = world.shards[static_cast<std::size_t>(i)];
      const int bs = std::min<int>(cfg.batch_size, static_cast<int>(sh.size()));
      Rng sgd_rng = make_rng(cfg.seed_sgd, stream::sgd,
                             static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(m) +
                                 static_cast<std::uint64_t>(i));
      grads[static_cast<std::size_t>(i)] =
          stochastic_gradient(world.task, world.devices[static_cast<std::size_t>(i)].w, sh, bs, sgd_rng);
    }
  }

  Vec wbar_prev = devices_mean(world.devices);

  std::vector<Vec> next(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    Vec acc(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < m; ++j) {
      const double pij = P(i, j);
      if (pij == 0.0) continue;
      const Vec& wj = world.devices[static_cast<std::size_t>(j)].w;
      for (int d = 0; d < n; ++d) acc[static_cast<std::size_t>(d)] += pij * wj[static_cast<std::size_t>(d)];
    }
    for (int d = 0; d < n; ++d)
      acc[static_cast<std::size_t>(d)] -= alpha * grads[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
    next[static_cast<std::size_t>(i)] = std::move(acc);
  }
  for (int i = 0; i < m; ++i) world.devices[static_cast<std::size_t>(i)].w = std::move(next[static_cast<std::size_t>(i)]);

  // w_bar recursion check: the post-step average must equal the pre-step
  // average minus (alpha/m) * sum of gradients.
  Vec predicted = std::move(wbar_prev);
  for (int i = 0; i < m; ++i)
    axpy(-alpha / static_cast<double>(m), grads[static_cast<std::size_t>(i)], predicted);
  const Vec wbar_now = devices_mean(world.devices);
  double residual = 0.0;
  for (std::size_t d = 0; d < predicted.size(); ++d)
    residual = std::max(residual, std::fabs(predicted[d] - wbar_now[d]));
  world.max_wbar_residual = std::max(world.max_wbar_residual, residual);

  // Accounting.
  std::vector<double> rho(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) rho[static_cast<std::size_t>(i)] = world.devices[static_cast<std::size_t>(i)].rho;
  const double score = resource_score(P.info_edges, snap, rho, n);
  world.score_cum += score;

  std::vector<std::uint8_t> participation(static_cast<std::size_t>(m), 0);
  for (const Edge& e : P.info_edges) {
    participation[static_cast<std::size_t>(e.a)] = 1;
    participation[static_cast<std::size_t>(e.b)] = 1;
  }
  world.v_trace.push_back(flags.v);
  world.participation_trace.push_back(std::move(participation));
  world.prev_snapshot = std::move(snap);

  MetricsRecord rec;
  rec.k = k + 1;
  rec.score_iter = score;
  rec.score_cum = world.score_cum;
  rec.n_broadcasts = 0;
  for (std::uint8_t b : flags.v) rec.n_broadcasts += b;
  rec.broadcast_flags = flags.v;
  rec.wbar_residual = residual;
  const auto [mx, mean] = devices_consensus(world.devices);
  rec.consensus_max = mx;
  rec.consensus_mean = mean;
  rec.wbar_drift = norm2(sub(wbar_now, world.wbar0));
  double interval_sum = 0.0;
  for (int i = 0; i < m; ++i) {
    const long count = world.broadcast_count[static_cast<std::size_t>(i)];
    interval_sum += static_cast<double>(k + 1) / static_cast<double>(std::max(1L, count));
    rec.max_interval = std::max(rec.max_interval,
                                count > 0 ? world.max_broadcast_gap[static_cast<std::size_t>(i)]
                                          : k + 1);
  }
  rec.mean_interval = interval_sum / static_cast<double>(m);
  if (evaluate) {
    rec.global_loss = global_mean_loss(world.task, wbar_now, world.shards);
    if (world.task.kind != TaskKind::Quadratic) {
      double acc_sum = 0.0;
      for (const DeviceState& d : world.devices)
        acc_sum += accuracy(world.task, d.w, world.test_shard);
      rec.mean_accuracy = acc_sum / static_cast<double>(m);
    }
  } else {
    rec.global_loss = std::numeric_limits<double>::quiet_NaN();
    rec.mean_accuracy = std::numeric_limits<double>::quiet_NaN();
  }
  return rec;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  World world = init_world(cfg);
  RunResult res;
  if (cfg.total_iterations == 0) {
    res.records.push_back(evaluate_record(world, 0));
  }
  for (long k = 0; k < cfg.total_iterations; ++k) {
    const bool evaluate = ((k + 1) % cfg.cadence == 0) || (k + 1 == cfg.total_iterations);
    MetricsRecord rec = step(world, k, evaluate);
    if (evaluate) res.records.push_back(std::move(rec));
  }
  if (cfg.record_trace) {
    std::vector<Vec> final_states(static_cast<std::size_t>(cfg.m));
    for (int i = 0; i < cfg.m; ++i)
      final_states[static_cast<std::size_t>(i)] = world.devices[static_cast<std::size_t>(i)].w;
    world.trace.states.push_back(std::move(final_states));
  }
  res.intercom = intercom_monitor(world.v_trace, cfg.b1_window, cfg.b2_budget);
  res.max_wbar_residual = world.max_wbar_residual;
  res.world = std::move(world);
  return res;
}

double accuracy_at_budget(std::span<const MetricsRecord> records, double budget) {
  if (records.empty()) throw std::invalid_argument("accuracy_at_budget: no records");
  double acc = records.front().mean_accuracy;
  for (const MetricsRecord& r : records) {
    if (r.score_cum <= budget) acc = r.mean_accuracy;
    else break;
  }
  return acc;
}

ExperimentConfig derive_replica_config(const ExperimentConfig& base, double connectivity,
                                       PolicyKind policy, int replica) {
  ExperimentConfig cfg = base;
  cfg.connectivity = connectivity;
  cfg.policy = policy;
  // Replica 0 keeps the base seeds, so a single-replica sweep reproduces a
  // plain run; higher replicas derive fresh paired streams.
  if (replica > 0) {
    const std::uint64_t r = static_cast<std::uint64_t>(replica);
    cfg.seed_topology = derive_seed(base.seed_topology, stream::replica, r);
    cfg.seed_data = derive_seed(base.seed_data, stream::replica, r);
    cfg.seed_policy = derive_seed(base.seed_policy, stream::replica, r);
    cfg.seed_sgd = derive_seed(base.seed_sgd, stream::replica, r);
  }
  return cfg;
}

std::vector<SweepRow> monte_carlo(const ExperimentConfig& base, int runs,
                                  std::span<const double> connectivity_grid,
                                  std::span<const PolicyKind> policies, int threads) {
  if (runs < 1) throw std::invalid_argument("monte_carlo: runs must be >= 1");
  if (connectivity_grid.empty() || policies.empty())
    throw std::invalid_argument("monte_carlo: empty grid or policy set");

  struct CellOutcome {
    std::vector<double> acc_at_budget;  // per policy
    std::vector<double> final_acc;
    std::vector<double> cum_score;
    double budget = 0.0;
  };

  const std::size_t n_cells = connectivity_grid.size() * static_cast<std::size_t>(runs);
  std::vector<CellOutcome> cells(n_cells);

  auto run_cell = [&](std::size_t cell) {
    const std::size_t ci = cell / static_cast<std::size_t>(runs);
    const int replica = static_cast<int>(cell % static_cast<std::size_t>(runs));
    CellOutcome out;
    std::vector<std::vector<MetricsRecord>> all_records;
    for (PolicyKind pol : policies) {
      const ExperimentConfig cfg =
          derive_replica_config(base, connectivity_grid[ci], pol, replica);
      RunResult res = run_experiment(cfg);
      out.final_acc.push_back(res.records.back().mean_accuracy);
      out.cum_score.push_back(res.records.back().score_cum);
      all_records.push_back(std::move(res.records));
    }
    double budget = base.transmission_budget;
    if (budget <= 0.0) {
      budget = *std::min_element(out.cum_score.begin(), out.cum_score.end());
    }
    out.budget = budget;
    for (const auto& recs : all_records)
      out.acc_at_budget.push_back(accuracy_at_budget(recs, budget));
    cells[cell] = std::move(out);
  };

  if (threads <= 1) {
    for (std::size_t c = 0; c < n_cells; ++c) run_cell(c);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (std::size_t c = next.fetch_add(1); c < n_cells; c = next.fetch_add(1)) run_cell(c);
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(threads, static_cast<int>(n_cells));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::vector<SweepRow> rows;
  for (std::size_t ci = 0; ci < connectivity_grid.size(); ++ci) {
    for (std::size_t pi = 0; pi < policies.size(); ++pi) {
      SweepRow row;
      row.connectivity = connectivity_grid[ci];
      row.policy = policies[pi];
      row.runs = runs;
      for (int r = 0; r < runs; ++r) {
        const CellOutcome& cell = cells[ci * static_cast<std::size_t>(runs) + static_cast<std::size_t>(r)];
        row.acc_at_budget += cell.acc_at_budget[pi];
        row.final_acc += cell.final_acc[pi];
        row.cum_score += cell.cum_score[pi];
        row.budget += cell.budget;
      }
      row.acc_at_budget /= runs;
      row.final_acc /= runs;
      row.cum_score /= runs;
      row.budget /= runs;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> records) {
  out << "k,mean_accuracy,global_loss,consensus_max,consensus_mean,score_iter,score_cum,"
         "n_broadcasts\n";
  for (const MetricsRecord& r : records) {
    out << r.k << ',' << fmt(r.mean_accuracy) << ',' << fmt(r.global_loss) << ','
        << fmt(r.consensus_max) << ',' << fmt(r.consensus_mean) << ',' << fmt(r.score_iter) << ','
        << fmt(r.score_cum) << ',' << r.n_broadcasts << '\n';
  }
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "connectivity,policy,runs,acc_at_budget,final_acc,cum_score,budget\n";
  for (const SweepRow& r : rows) {
    out << fmt(r.connectivity) << ',' << to_string(r.policy) << ',' << r.runs << ','
        << fmt(r.acc_at_budget) << ',' << fmt(r.final_acc) << ',' << fmt(r.cum_score) << ','
        << fmt(r.budget) << '\n';
  }
}

}  // namespace efhc
