#pragma once

// Test-only random instance generators, independent of the library's own
// verification plumbing.

#include <algorithm>
#include <vector>

#include "efhc/mixing.hpp"
#include "efhc/rng.hpp"
#include "efhc/topology.hpp"

namespace efhc::testsup {

/// Connected random graph: a random spanning tree plus a few extra edges.
inline GraphSnapshot random_snapshot(Rng& rng, int m, long iteration = 0) {
  std::vector<Edge> edges;
  for (int v = 1; v < m; ++v)
    edges.emplace_back(static_cast<int>(bounded_int(rng, static_cast<std::uint64_t>(v))), v);
  const int extra = static_cast<int>(bounded_int(rng, static_cast<std::uint64_t>(2 * m)));
  for (int e = 0; e < extra; ++e) {
    const int a = static_cast<int>(bounded_int(rng, static_cast<std::uint64_t>(m)));
    const int b = static_cast<int>(bounded_int(rng, static_cast<std::uint64_t>(m)));
    if (a != b) edges.emplace_back(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  GraphSnapshot g;
  g.m = m;
  g.iteration = iteration;
  g.edges = std::move(edges);
  return g;
}

inline BroadcastFlags random_flags(Rng& rng, const GraphSnapshot& snap, double p_broadcast = 0.5,
                                   double p_forced = 0.1) {
  BroadcastFlags flags;
  flags.v.resize(static_cast<std::size_t>(snap.m));
  for (auto& v : flags.v) v = uniform_double(rng) < p_broadcast ? 1 : 0;
  for (const Edge& e : snap.edges)
    if (uniform_double(rng) < p_forced) flags.forced_edges.push_back(e);
  return flags;
}

inline GraphSnapshot snapshot_from_edges(int m, std::initializer_list<std::pair<int, int>> list,
                                         long iteration = 0) {
  GraphSnapshot g;
  g.m = m;
  g.iteration = iteration;
  for (const auto& [a, b] : list) g.edges.emplace_back(a, b);
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

}  // namespace efhc::testsup
