#include "efhc/verify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "efhc/learning.hpp"
#include "efhc/mixing.hpp"
#include "efhc/protocol.hpp"
#include "efhc/rng.hpp"
#include "efhc/topology.hpp"

namespace efhc {

namespace {

GraphSnapshot random_connected_snapshot(Rng& rng, int m) {
  // Random spanning tree plus extra random edges keeps degrees varied.
  std::vector<Edge> edges;
  for (int v = 1; v < m; ++v) {
    const int u = static_cast<int>(bounded_int(rng, static_cast<std::uint64_t>(v)));
    edges.emplace_back(u, v);
  }
  const int extra = static_cast<int>(bounded_int(rng, static_cast<std::uint64_t>(m) + 1));
  for (int e = 0; e < extra; ++e) {
    const int a = static_cast<int>(bounded_int(rng, static_cast<std::uint64_t>(m)));
    const int b = static_cast<int>(bounded_int(rng, static_cast<std::uint64_t>(m)));
    if (a != b) edges.emplace_back(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  GraphSnapshot g;
  g.m = m;
  g.edges = std::move(edges);
  return g;
}

BroadcastFlags random_flags(Rng& rng, const GraphSnapshot& snap) {
  BroadcastFlags flags;
  flags.v.resize(static_cast<std::size_t>(snap.m));
  for (auto& v : flags.v) v = uniform_double(rng) < 0.5 ? 1 : 0;
  for (const Edge& e : snap.edges)
    if (uniform_double(rng) < 0.1) flags.forced_edges.push_back(e);
  return flags;
}

struct FdOutcome {
  double max_rel_err = 0.0;
  int checked = 0;
};

FdOutcome finite_difference_check(TaskKind kind, int draws, Rng& rng) {
  TaskSpec task;
  task.kind = kind;
  task.n_features = 6;
  task.classes = 3;
  task.lambda = kind == TaskKind::Quadratic ? 0.0 : 1e-3;
  const int dim = task.dim();
  const double h = 1e-6;

  FdOutcome out;
  for (int d = 0; d < draws; ++d) {
    Shard shard;
    const int pts = kind == TaskKind::Quadratic ? 1 : 5;
    for (int p = 0; p < pts; ++p) {
      DataPoint pt;
      pt.y = static_cast<int>(bounded_int(rng, static_cast<std::uint64_t>(task.classes)));
      pt.x.resize(static_cast<std::size_t>(task.n_features));
      for (double& v : pt.x) v = 2.0 * uniform_double(rng) - 1.0;
      shard.points.push_back(std::move(pt));
    }

    Vec w(static_cast<std::size_t>(dim));
    bool clean = false;
    for (int attempt = 0; attempt < 200 && !clean; ++attempt) {
      for (double& v : w) v = 2.0 * uniform_double(rng) - 1.0;
      clean = true;
      if (kind == TaskKind::Hinge) {
        // Stay away from hinge kinks so central differences are valid.
        for (const DataPoint& p : shard.points) {
          for (int c = 0; c < task.classes; ++c) {
            const int block = task.n_features + 1;
            double s = w[static_cast<std::size_t>(c * block + task.n_features)];
            for (int f = 0; f < task.n_features; ++f)
              s += w[static_cast<std::size_t>(c * block + f)] * p.x[static_cast<std::size_t>(f)];
            const double yc = (p.y == c) ? 1.0 : -1.0;
            if (std::fabs(1.0 - yc * s) < 1e-3) clean = false;
          }
        }
      }
    }
    if (!clean) continue;

    Rng grad_rng = rng;  // full batch ignores the stream anyway
    const Vec g = stochastic_gradient(task, w, shard, static_cast<int>(shard.size()), grad_rng);

    Vec dir(static_cast<std::size_t>(dim));
    for (double& v : dir) v = 2.0 * uniform_double(rng) - 1.0;
    const double dn = norm2(dir);
    for (double& v : dir) v /= dn;

    Vec wp = w, wm = w;
    axpy(h, dir, wp);
    axpy(-h, dir, wm);
    const double fd =
        (mean_local_loss(task, wp, shard) - mean_local_loss(task, wm, shard)) / (2.0 * h);
    const double analytic = dot(g, dir);
    const double rel = std::fabs(fd - analytic) / std::max(std::fabs(analytic), 1e-8);
    out.max_rel_err = std::max(out.max_rel_err, rel);
    ++out.checked;
  }
  return out;
}

}  // namespace

VerificationSuite run_verification_suite(const VerificationOptions& opts) {
  VerificationSuite suite;
  Rng rng(derive_seed(opts.seed, 777));

  // Transition-weight properties over random snapshot/flag pairs.
  {
    double max_row = 0.0, max_col = 0.0, max_asym = 0.0;
    double worst_margin = 1.0;  // min over cases of (min_nonzero - 1/m)
    bool support_ok = true;
    for (int t = 0; t < opts.random_matrix_cases; ++t) {
      const int m = 2 + static_cast<int>(bounded_int(
                            rng, static_cast<std::uint64_t>(opts.max_devices - 1)));
      const GraphSnapshot snap = random_connected_snapshot(rng, m);
      const BroadcastFlags flags = random_flags(rng, snap);
      MixingMatrix p = build_transition_matrix(snap, flags);
      if (opts.fault == FaultInjection::AsymmetricWeight && !p.info_edges.empty()) {
        const Edge e = p.info_edges.front();
        p.w[static_cast<std::size_t>(e.a) * static_cast<std::size_t>(m) +
            static_cast<std::size_t>(e.b)] += 0.05;
      }
      const TransitionReport rep = verify_transition(p, 1.0 / static_cast<double>(m));
      max_row = std::max(max_row, rep.max_row_err);
      max_col = std::max(max_col, rep.max_col_err);
      max_asym = std::max(max_asym, rep.max_asymmetry);
      support_ok = support_ok && rep.support_ok;
      worst_margin = std::min(worst_margin, rep.min_nonzero - 1.0 / static_cast<double>(m));
    }
    std::ostringstream d;
    d << opts.random_matrix_cases << " random cases, m<=" << opts.max_devices;
    suite.checks.push_back({"doubly-stochastic weights (row sums)", max_row <= 1e-12,
                            d.str() + ", max row err " + std::to_string(max_row)});
    suite.checks.push_back({"doubly-stochastic weights (column sums)", max_col <= 1e-12,
                            "max col err " + std::to_string(max_col)});
    suite.checks.push_back({"symmetric weights", max_asym <= 1e-12,
                            "max asymmetry " + std::to_string(max_asym)});
    suite.checks.push_back({"zero weights outside the information flow", support_ok,
                            support_ok ? "support matches" : "support mismatch found"});
    suite.checks.push_back({"non-negative weights with floor eta = 1/m",
                            worst_margin >= -1e-12,
                            "worst margin above 1/m: " + std::to_string(worst_margin)});
  }

  // Gradient agreement with central differences per task kind.
  for (TaskKind kind : {TaskKind::Quadratic, TaskKind::Hinge, TaskKind::Logistic}) {
    const FdOutcome fd = finite_difference_check(kind, opts.gradient_checks, rng);
    suite.checks.push_back({"bounded, consistent gradients (" + to_string(kind) + ")",
                            fd.checked > 0 && fd.max_rel_err <= 1e-5,
                            std::to_string(fd.checked) + " checks, max rel err " +
                                std::to_string(fd.max_rel_err)});
  }

  // Convexity of the local losses: first-order lower bound.
  {
    bool convex = true;
    double worst = 0.0;
    for (TaskKind kind : {TaskKind::Quadratic, TaskKind::Hinge, TaskKind::Logistic}) {
      TaskSpec task{kind, 5, 3, kind == TaskKind::Quadratic ? 0.0 : 1e-3};
      const int dim = task.dim();
      Shard shard;
      const int pts = kind == TaskKind::Quadratic ? 1 : 4;
      for (int p = 0; p < pts; ++p) {
        DataPoint pt;
        pt.y = static_cast<int>(bounded_int(rng, static_cast<std::uint64_t>(task.classes)));
        pt.x.resize(static_cast<std::size_t>(task.n_features));
        for (double& v : pt.x) v = 2.0 * uniform_double(rng) - 1.0;
        shard.points.push_back(std::move(pt));
      }
      for (int t = 0; t < 100; ++t) {
        Vec w(static_cast<std::size_t>(dim)), w2(static_cast<std::size_t>(dim));
        for (double& v : w) v = 2.0 * uniform_double(rng) - 1.0;
        for (double& v : w2) v = 2.0 * uniform_double(rng) - 1.0;
        Vec grad(static_cast<std::size_t>(dim), 0.0);
        for (const DataPoint& p : shard.points) add_point_gradient(task, w, p, grad);
        if (task.lambda > 0.0) axpy(task.lambda, w, grad);
        const double lhs = local_loss(task, w2, shard);
        const double rhs = local_loss(task, w, shard) + dot(grad, sub(w2, w));
        worst = std::min(worst, lhs - rhs);
        if (lhs < rhs - 1e-9) convex = false;
      }
    }
    suite.checks.push_back({"convex local losses (first-order bound)", convex,
                            "worst slack " + std::to_string(worst)});
  }

  // Step-size family criteria.
  {
    bool ok = true;
    for (double c : {0.6, 0.75, 1.0}) {
      ScheduleSpec s{1.0, 1.0, c, 1.0};
      if (!s.satisfies_step_size_criteria()) ok = false;
    }
    ScheduleSpec bad{1.0, 1.0, 0.4, 1.0};
    if (bad.satisfies_step_size_criteria()) ok = false;
    ScheduleSpec common{1.0, 1.0, 0.5, 1.0};
    bool diminishing = true;
    double prev = common.alpha(0);
    for (long k = 1; k < 10000; k *= 2) {
      const double a = common.alpha(k);
      if (a >= prev) diminishing = false;
      prev = a;
    }
    suite.checks.push_back({"diminishing step sizes", ok && diminishing && prev < 0.02,
                            "criteria flags correct, alpha(8192) = " + std::to_string(prev)});
  }

  // Windowed connectivity of generated topologies.
  {
    bool ok = true;
    std::ostringstream d;
    for (int m : {5, 10, 15}) {
      const GraphSnapshot base =
          generate_geometric_graph(m, 0.5, derive_seed(opts.seed, 31, static_cast<std::uint64_t>(m)));
      TopologyProcess proc{base, 1.0, derive_seed(opts.seed, 32)};
      std::vector<GraphSnapshot> trace;
      for (long k = 0; k < 16; ++k) trace.push_back(sample_snapshot(proc, k));
      if (!verify_b_connectivity(trace, 1)) ok = false;

      TopologyProcess flaky{base, 0.5, derive_seed(opts.seed, 33)};
      std::vector<GraphSnapshot> flaky_trace;
      for (long k = 0; k < 64; ++k) flaky_trace.push_back(sample_snapshot(flaky, k));
      int window = -1;
      for (int b = 1; b <= 32; ++b) {
        if (verify_b_connectivity(flaky_trace, b)) {
          window = b;
          break;
        }
      }
      if (window < 0) ok = false;
      d << "m=" << m << " window=" << window << " ";
    }
    suite.checks.push_back({"windowed graph connectivity", ok, d.str()});
  }

  return suite;
}

void print_verification(std::ostream& out, const VerificationSuite& suite) {
  for (const CheckResult& c : suite.checks) {
    out << (c.ok ? "[PASS] " : "[FAIL] ") << c.name;
    if (!c.detail.empty()) out << " - " << c.detail;
    out << "\n";
  }
  out << (suite.ok() ? "all checks passed" : "CHECKS FAILED") << "\n";
}

}  // namespace efhc
