#include "efhc/protocol.hpp"

#include <cmath>
#include <stdexcept>

namespace efhc {

double ScheduleSpec::alpha(long k) const { return a / std::pow(b + static_cast<double>(k), c); }

double ScheduleSpec::gamma(long k) const { return omega * alpha(gamma_constant ? 0 : k); }

void ScheduleSpec::validate() const {
  if (a <= 0.0) throw std::invalid_argument("schedule: a must be > 0");
  if (b < 1.0) throw std::invalid_argument("schedule: b must be >= 1");
  if (c <= 0.0 || c > 1.0) throw std::invalid_argument("schedule: c must be in (0, 1]");
  if (omega <= 0.0) throw std::invalid_argument("schedule: omega must be > 0");
}

void ThresholdSpec::validate() const {
  if (r <= 0.0) throw std::invalid_argument("threshold: r must be > 0");
  if (q < 1.0) throw std::invalid_argument("threshold: q must be >= 1");
}

double normalized_norm(std::span<const double> v, double q) {
  if (v.empty()) return 0.0;
  const double n = static_cast<double>(v.size());
  return std::pow(1.0 / n, 1.0 / q) * norm_q(v, q);
}

bool broadcast_triggered(std::span<const double> w, std::span<const double> w_hat, double rho,
                         long k, const ThresholdSpec& threshold, const ScheduleSpec& schedule) {
  if (w.size() != w_hat.size())
    throw std::invalid_argument("broadcast_triggered: dimension mismatch");
  const Vec e = sub(w, w_hat);
  return normalized_norm(e, threshold.q) >= threshold.r * rho * schedule.gamma(k);
}

bool broadcast_triggered(const DeviceState& state, long k, const ThresholdSpec& threshold,
                         const ScheduleSpec& schedule) {
  return broadcast_triggered(state.w, state.w_hat, state.rho, k, threshold, schedule);
}

BroadcastMessage apply_broadcast(DeviceState& state, int degree) {
  BroadcastMessage msg;
  msg.w = state.w;
  msg.degree = degree;
  state.w_hat = state.w;
  return msg;
}

std::vector<Edge> handle_neighbor_change(DeviceState& state, int self, std::span<const int> joined,
                                         std::span<const int> left) {
  std::vector<Edge> forced;
  for (int j : joined) {
    state.neighbors.insert(j);
    forced.emplace_back(self, j);
  }
  for (int j : left) state.neighbors.erase(j);
  return forced;
}

void aggregate(DeviceState& state, std::span<const ReceivedModel> received) {
  if (received.empty()) return;
  Vec delta(state.w.size(), 0.0);
  for (const ReceivedModel& r : received) {
    if (r.w == nullptr || r.w->size() != state.w.size())
      throw std::invalid_argument("aggregate: dimension mismatch");
    for (std::size_t i = 0; i < delta.size(); ++i)
      delta[i] += r.beta * ((*r.w)[i] - state.w[i]);
  }
  axpy(1.0, delta, state.w);
}

void sgd_step(DeviceState& state, std::span<const double> gradient, long k,
              const ScheduleSpec& schedule) {
  if (gradient.size() != state.w.size())
    throw std::invalid_argument("sgd_step: dimension mismatch");
  axpy(-schedule.alpha(k), gradient, state.w);
}

double r_guideline(double alpha0, double gamma0, double inv_rho_mean, double k_agg,
                   double l_inf) {
  if (alpha0 <= 0.0 || gamma0 <= 0.0 || inv_rho_mean <= 0.0 || k_agg <= 0.0 || l_inf <= 0.0)
    throw std::invalid_argument("r_guideline: all inputs must be positive");
  return (alpha0 / gamma0) * inv_rho_mean * k_agg * l_inf;
}

}  // namespace efhc
