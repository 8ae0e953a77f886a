#pragma once

#include <set>
#include <span>
#include <vector>

#include "efhc/linalg.hpp"
#include "efhc/topology.hpp"

namespace efhc {

/// Per-device protocol state: the live (main) parameters, the last-broadcast
/// (auxiliary) copy, the current neighbor set, and the resource coefficient
/// rho = 1/bandwidth that scales this device's broadcast threshold.
struct DeviceState {
  Vec w;
  Vec w_hat;
  std::set<int> neighbors;
  double bandwidth = 1.0;
  double rho = 1.0;
};

/// Diminishing step-size family alpha(k) = a / (b + k)^c together with the
/// threshold decay gamma(k) = omega * alpha(k). gamma_constant freezes
/// gamma(k) at gamma(0); that breaks the matched-decay condition and exists
/// only to demonstrate what goes wrong when it is violated.
struct ScheduleSpec {
  double a = 1.0;
  double b = 1.0;
  double c = 0.5;
  double omega = 1.0;
  bool gamma_constant = false;

  double alpha(long k) const;
  double gamma(long k) const;

  /// True iff alpha is diminishing with divergent sum and convergent sum of
  /// squares, i.e. c in (0.5, 1]. c = 0.5 is still accepted by validate()
  /// since it is the common experimental choice.
  bool satisfies_step_size_criteria() const { return c > 0.5 && c <= 1.0; }
  void validate() const;
};

struct ThresholdSpec {
  double r = 50.0;  // scaling hyperparameter, > 0
  double q = 2.0;   // norm order, >= 1

  void validate() const;
};

/// Dimension-normalized q-norm (1/n)^(1/q) * ||v||_q. For a constant vector
/// this equals the absolute entry value for every n and q.
double normalized_norm(std::span<const double> v, double q);

/// Broadcast trigger: (1/n)^(1/q) ||w - w_hat||_q >= r * rho * gamma(k).
/// The boundary case counts as triggered.
bool broadcast_triggered(std::span<const double> w, std::span<const double> w_hat, double rho,
                         long k, const ThresholdSpec& threshold, const ScheduleSpec& schedule);
bool broadcast_triggered(const DeviceState& state, long k, const ThresholdSpec& threshold,
                         const ScheduleSpec& schedule);

struct BroadcastMessage {
  Vec w;
  int degree = 0;
};

/// Resets the auxiliary copy to the current main parameters and returns the
/// outgoing message (pre-consensus parameters plus instantaneous degree).
BroadcastMessage apply_broadcast(DeviceState& state, int degree);

/// Applies a neighbor join/leave delta and returns the forced exchange edges
/// for newly connected pairs (one per join).
std::vector<Edge> handle_neighbor_change(DeviceState& state, int self, std::span<const int> joined,
                                         std::span<const int> left);

struct ReceivedModel {
  int from = 0;
  const Vec* w = nullptr;
  double beta = 0.0;
};

/// Weighted-averaging consensus update w += sum_j beta_ij (w_j - w).
void aggregate(DeviceState& state, std::span<const ReceivedModel> received);

/// SGD update w -= alpha(k) * gradient.
void sgd_step(DeviceState& state, std::span<const double> gradient, long k,
              const ScheduleSpec& schedule);

/// Threshold scale guideline r = (alpha0/gamma0) * inv_rho_mean * k_agg * l_inf,
/// where inv_rho_mean approximates the network mean of 1/rho_i, k_agg is the
/// target number of local iterations between aggregations, and l_inf bounds
/// the gradient infinity norm.
double r_guideline(double alpha0, double gamma0, double inv_rho_mean, double k_agg, double l_inf);

}  // namespace efhc
