#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "efhc/topology.hpp"

namespace efhc {

/// Per-iteration broadcast indicators: v[i] = 1 if device i broadcast this
/// iteration, plus edges whose exchange is forced by a new connection (those
/// carry parameters regardless of the indicators).
struct BroadcastFlags {
  std::vector<std::uint8_t> v;
  std::vector<Edge> forced_edges;
};

/// Symmetric doubly-stochastic transition matrix for one consensus step.
/// info_edges is the realized information-flow graph: the subset of physical
/// edges that actually carried parameters this iteration.
struct MixingMatrix {
  int m = 0;
  long iteration = 0;
  std::vector<double> w;  // row-major m*m
  std::vector<Edge> info_edges;

  double operator()(int i, int j) const {
    return w[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
             static_cast<std::size_t>(j)];
  }
  static MixingMatrix identity(int m, long iteration = 0);
};

/// min(1/(1+d_i), 1/(1+d_j)) for an edge whose endpoints have the given
/// degrees. Both degrees must be >= 1 since the edge itself contributes.
double metropolis_weight(int deg_i, int deg_j);

/// Edges of the physical snapshot that exchange parameters under `flags`:
/// an edge carries iff either endpoint broadcast or the edge is forced.
std::vector<Edge> info_flow_edges(const GraphSnapshot& snapshot, const BroadcastFlags& flags);

/// Assembles P(k): off-diagonal entries are Metropolis weights on the
/// information-flow edges, diagonal entries absorb the remainder so each row
/// sums to one. Degrees come from the physical snapshot.
MixingMatrix build_transition_matrix(const GraphSnapshot& snapshot, const BroadcastFlags& flags);

struct TransitionReport {
  bool row_stochastic = false;
  bool col_stochastic = false;
  bool symmetric = false;
  bool support_ok = false;
  bool min_weight_ok = false;
  double max_row_err = 0.0;
  double max_col_err = 0.0;
  double max_asymmetry = 0.0;
  double min_nonzero = 0.0;

  bool pass() const {
    return row_stochastic && col_stochastic && symmetric && support_ok && min_weight_ok;
  }
  std::string summary() const;
};

/// Checks row/column stochasticity, symmetry, support against the stored
/// information-flow edges, and that every nonzero entry is >= eta (up to tol).
TransitionReport verify_transition(const MixingMatrix& matrix, double eta, double tol = 1e-12);

void write_matrix_csv(std::ostream& out, const MixingMatrix& matrix);

}  // namespace efhc
