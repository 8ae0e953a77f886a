#include "efhc/policies.hpp"

#include <stdexcept>

namespace efhc {

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::EFHC: return "efhc";
    case PolicyKind::ZT: return "zt";
    case PolicyKind::GT: return "gt";
    case PolicyKind::RG: return "rg";
  }
  return "unknown";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "efhc") return PolicyKind::EFHC;
  if (s == "zt") return PolicyKind::ZT;
  if (s == "gt") return PolicyKind::GT;
  if (s == "rg") return PolicyKind::RG;
  throw std::invalid_argument("unknown policy: " + s);
}

void Policy::validate() const {
  if (kind == PolicyKind::GT && rho_global <= 0.0)
    throw std::invalid_argument("policy gt: rho_global must be > 0");
  if (kind == PolicyKind::RG && (gossip_prob <= 0.0 || gossip_prob > 1.0))
    throw std::invalid_argument("policy rg: gossip_prob must be in (0, 1]");
}

BroadcastFlags compute_flags(const Policy& policy, std::span<const DeviceState> states, long k,
                             const ThresholdSpec& threshold, const ScheduleSpec& schedule,
                             Rng& rng) {
  if (states.empty()) throw std::invalid_argument("compute_flags: no devices");
  policy.validate();

  BroadcastFlags flags;
  flags.v.assign(states.size(), 0);
  for (std::size_t i = 0; i < states.size(); ++i) {
    bool fire = false;
    switch (policy.kind) {
      case PolicyKind::EFHC:
        fire = broadcast_triggered(states[i], k, threshold, schedule);
        break;
      case PolicyKind::ZT:
        fire = true;
        break;
      case PolicyKind::GT:
        fire = broadcast_triggered(states[i].w, states[i].w_hat, policy.rho_global, k, threshold,
                                   schedule);
        break;
      case PolicyKind::RG:
        fire = uniform_double(rng) < policy.gossip_prob;
        break;
    }
    flags.v[i] = fire ? 1 : 0;
  }
  return flags;
}

}  // namespace efhc
