#include "efhc/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace efhc {

MixingMatrix MixingMatrix::identity(int m, long iteration) {
  MixingMatrix p;
  p.m = m;
  p.iteration = iteration;
  p.w.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) p.w[static_cast<std::size_t>(i) * (m + 1u)] = 1.0;
  return p;
}

double metropolis_weight(int deg_i, int deg_j) {
  if (deg_i < 1 || deg_j < 1)
    throw std::invalid_argument("metropolis_weight: an edge implies degrees >= 1");
  return std::min(1.0 / (1.0 + deg_i), 1.0 / (1.0 + deg_j));
}

std::vector<Edge> info_flow_edges(const GraphSnapshot& snapshot, const BroadcastFlags& flags) {
  if (static_cast<int>(flags.v.size()) != snapshot.m)
    throw std::invalid_argument("info_flow_edges: flags sized differently than snapshot");
  for (const Edge& e : flags.forced_edges) {
    if (!snapshot.has_edge(e.a, e.b))
      throw std::invalid_argument("info_flow_edges: forced edge not in snapshot");
  }
  std::vector<Edge> out;
  for (const Edge& e : snapshot.edges) {
    bool carries = flags.v[static_cast<std::size_t>(e.a)] || flags.v[static_cast<std::size_t>(e.b)];
    if (!carries) {
      carries = std::find(flags.forced_edges.begin(), flags.forced_edges.end(), e) !=
                flags.forced_edges.end();
    }
    if (carries) out.push_back(e);
  }
  return out;
}

MixingMatrix build_transition_matrix(const GraphSnapshot& snapshot, const BroadcastFlags& flags) {
  const int m = snapshot.m;
  MixingMatrix p;
  p.m = m;
  p.iteration = snapshot.iteration;
  p.w.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
  p.info_edges = info_flow_edges(snapshot, flags);

  const std::vector<int> deg = snapshot.degrees();
  for (const Edge& e : p.info_edges) {
    const double beta = metropolis_weight(deg[static_cast<std::size_t>(e.a)],
                                          deg[static_cast<std::size_t>(e.b)]);
    p.w[static_cast<std::size_t>(e.a) * static_cast<std::size_t>(m) + static_cast<std::size_t>(e.b)] = beta;
    p.w[static_cast<std::size_t>(e.b) * static_cast<std::size_t>(m) + static_cast<std::size_t>(e.a)] = beta;
  }
  for (int i = 0; i < m; ++i) {
    double off = 0.0;
    for (int j = 0; j < m; ++j) {
      if (j != i) off += p.w[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)];
    }
    p.w[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)] = 1.0 - off;
  }
  return p;
}

TransitionReport verify_transition(const MixingMatrix& matrix, double eta, double tol) {
  const int m = matrix.m;
  TransitionReport rep;
  rep.min_nonzero = 1.0;

  for (int i = 0; i < m; ++i) {
    double row = 0.0, col = 0.0;
    for (int j = 0; j < m; ++j) {
      row += matrix(i, j);
      col += matrix(j, i);
      rep.max_asymmetry = std::max(rep.max_asymmetry, std::fabs(matrix(i, j) - matrix(j, i)));
      if (matrix(i, j) != 0.0) rep.min_nonzero = std::min(rep.min_nonzero, matrix(i, j));
    }
    rep.max_row_err = std::max(rep.max_row_err, std::fabs(row - 1.0));
    rep.max_col_err = std::max(rep.max_col_err, std::fabs(col - 1.0));
  }

  bool negative = false;
  for (double x : matrix.w) {
    if (x < 0.0) negative = true;
  }

  bool support = true;
  for (int i = 0; i < m && support; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const bool in_info = std::binary_search(matrix.info_edges.begin(),
                                              matrix.info_edges.end(), Edge(i, j));
      const bool nonzero = matrix(i, j) != 0.0;
      if (in_info != nonzero) {
        support = false;
        break;
      }
    }
  }

  rep.row_stochastic = rep.max_row_err <= tol;
  rep.col_stochastic = rep.max_col_err <= tol;
  rep.symmetric = rep.max_asymmetry <= tol;
  rep.support_ok = support;
  rep.min_weight_ok = !negative && rep.min_nonzero >= eta - tol;
  return rep;
}

std::string TransitionReport::summary() const {
  std::ostringstream os;
  os << "row_stochastic=" << (row_stochastic ? "pass" : "FAIL")
     << " (err " << max_row_err << "), col_stochastic=" << (col_stochastic ? "pass" : "FAIL")
     << " (err " << max_col_err << "), symmetric=" << (symmetric ? "pass" : "FAIL")
     << " (asym " << max_asymmetry << "), support=" << (support_ok ? "pass" : "FAIL")
     << ", min_weight=" << (min_weight_ok ? "pass" : "FAIL")
     << " (min nonzero " << min_nonzero << ")";
  return os.str();
}

void write_matrix_csv(std::ostream& out, const MixingMatrix& matrix) {
  char buf[32];
  for (int i = 0; i < matrix.m; ++i) {
    for (int j = 0; j < matrix.m; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", matrix(i, j));
      out << buf << (j + 1 == matrix.m ? '\n' : ',');
    }
  }
}

}  // namespace efhc
