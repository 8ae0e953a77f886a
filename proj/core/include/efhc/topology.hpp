#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace efhc {

/// Undirected edge, stored normalized with a < b.
struct Edge {
  int a = 0;
  int b = 0;

  Edge() = default;
  Edge(int i, int j) : a(i < j ? i : j), b(i < j ? j : i) {}

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// The physical communication graph at one iteration: m devices and the set
/// of links available between them.
struct GraphSnapshot {
  int m = 0;
  long iteration = 0;
  std::vector<Edge> edges;  // sorted, unique, no self-loops

  bool has_edge(int i, int j) const;
  std::vector<int> degrees() const;
  std::vector<std::vector<int>> adjacency() const;
};

/// Time-varying link process on top of a static base graph: every base edge
/// is present at iteration k independently with availability_prob, from a
/// stream derived from (seed, k). availability_prob = 1 reproduces the base
/// graph at every iteration.
struct TopologyProcess {
  GraphSnapshot base;
  double availability_prob = 1.0;
  std::uint64_t seed = 0;
};

/// Places m nodes uniformly at random in the unit square and connects pairs
/// within Euclidean distance `connectivity` (a connection radius). Placement
/// is retried until the graph is connected; throws after max_retries
/// placements, which signals a radius too small for m.
GraphSnapshot generate_geometric_graph(int m, double connectivity, std::uint64_t seed,
                                       int max_retries = 1000);

GraphSnapshot sample_snapshot(const TopologyProcess& process, long k);

bool union_is_connected(std::span<const GraphSnapshot> snapshots);

/// True iff the union of every window of B1 consecutive snapshots is
/// connected. Requires B1 >= 1 and trace length >= B1.
bool verify_b_connectivity(std::span<const GraphSnapshot> trace, int window);

/// Edge-list text form, one "k i j" line per edge.
void write_edge_list(std::ostream& out, const GraphSnapshot& snapshot);

}  // namespace efhc
