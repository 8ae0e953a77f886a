#include "efhc/topology.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "efhc/rng.hpp"

namespace efhc {

bool GraphSnapshot::has_edge(int i, int j) const {
  if (i == j) return false;
  return std::binary_search(edges.begin(), edges.end(), Edge(i, j));
}

std::vector<int> GraphSnapshot::degrees() const {
  std::vector<int> d(static_cast<std::size_t>(m), 0);
  for (const Edge& e : edges) {
    ++d[static_cast<std::size_t>(e.a)];
    ++d[static_cast<std::size_t>(e.b)];
  }
  return d;
}

std::vector<std::vector<int>> GraphSnapshot::adjacency() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(m));
  for (const Edge& e : edges) {
    adj[static_cast<std::size_t>(e.a)].push_back(e.b);
    adj[static_cast<std::size_t>(e.b)].push_back(e.a);
  }
  return adj;
}

namespace {

bool connected(int m, const std::vector<Edge>& edges) {
  if (m <= 0) return false;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(m));
  for (const Edge& e : edges) {
    adj[static_cast<std::size_t>(e.a)].push_back(e.b);
    adj[static_cast<std::size_t>(e.b)].push_back(e.a);
  }
  std::vector<char> seen(static_cast<std::size_t>(m), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == m;
}

}  // namespace

GraphSnapshot generate_geometric_graph(int m, double connectivity, std::uint64_t seed,
                                       int max_retries) {
  if (m < 2) throw std::invalid_argument("generate_geometric_graph: m must be >= 2");
  if (connectivity <= 0.0)
    throw std::invalid_argument("generate_geometric_graph: connectivity must be > 0");

  Rng rng = make_rng(seed, stream::topology_base);
  const double r2 = connectivity * connectivity;

  for (int attempt = 0; attempt < max_retries; ++attempt) {
    std::vector<double> xs(static_cast<std::size_t>(m)), ys(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      xs[static_cast<std::size_t>(i)] = uniform_double(rng);
      ys[static_cast<std::size_t>(i)] = uniform_double(rng);
    }
    std::vector<Edge> edges;
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        double dx = xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)];
        double dy = ys[static_cast<std::size_t>(i)] - ys[static_cast<std::size_t>(j)];
        if (dx * dx + dy * dy <= r2) edges.emplace_back(i, j);
      }
    }
    if (connected(m, edges)) {
      GraphSnapshot g;
      g.m = m;
      g.iteration = 0;
      g.edges = std::move(edges);  // already sorted by construction order
      return g;
    }
  }
  throw std::runtime_error(
      "generate_geometric_graph: no connected placement within " +
      std::to_string(max_retries) + " retries (radius too small for m=" +
      std::to_string(m) + ")");
}

GraphSnapshot sample_snapshot(const TopologyProcess& process, long k) {
  GraphSnapshot g;
  g.m = process.base.m;
  g.iteration = k;
  if (process.availability_prob >= 1.0) {
    g.edges = process.base.edges;
    return g;
  }
  Rng rng = make_rng(process.seed, stream::availability, static_cast<std::uint64_t>(k));
  for (const Edge& e : process.base.edges) {
    if (uniform_double(rng) < process.availability_prob) g.edges.push_back(e);
  }
  return g;
}

bool union_is_connected(std::span<const GraphSnapshot> snapshots) {
  if (snapshots.empty()) return false;
  const int m = snapshots[0].m;
  std::vector<Edge> all;
  for (const GraphSnapshot& s : snapshots) {
    if (s.m != m) throw std::invalid_argument("union_is_connected: mixed device counts");
    all.insert(all.end(), s.edges.begin(), s.edges.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return connected(m, all);
}

bool verify_b_connectivity(std::span<const GraphSnapshot> trace, int window) {
  if (window < 1) throw std::invalid_argument("verify_b_connectivity: window must be >= 1");
  if (static_cast<int>(trace.size()) < window)
    throw std::invalid_argument("verify_b_connectivity: trace shorter than window");
  for (std::size_t start = 0; start + static_cast<std::size_t>(window) <= trace.size(); ++start) {
    if (!union_is_connected(trace.subspan(start, static_cast<std::size_t>(window))))
      return false;
  }
  return true;
}

void write_edge_list(std::ostream& out, const GraphSnapshot& snapshot) {
  for (const Edge& e : snapshot.edges) {
    out << snapshot.iteration << ' ' << e.a << ' ' << e.b << '\n';
  }
}

}  // namespace efhc
