#pragma once

#include <span>
#include <string>

#include "efhc/mixing.hpp"
#include "efhc/protocol.hpp"
#include "efhc/rng.hpp"

namespace efhc {

/// Communication policies deciding the per-iteration broadcast indicators:
///   EFHC - per-device threshold with rho_i = 1/b_i
///   ZT   - zero threshold, broadcast every iteration
///   GT   - one global threshold using rho_global for every device
///   RG   - randomized gossip, broadcast with probability gossip_prob
enum class PolicyKind { EFHC, ZT, GT, RG };

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& s);

struct Policy {
  PolicyKind kind = PolicyKind::EFHC;
  double rho_global = 0.0;   // GT only
  double gossip_prob = 0.0;  // RG only, in (0, 1]

  void validate() const;
};

/// Evaluates each device's broadcast indicator for iteration k. forced_edges
/// is left empty; the caller layers connection-event exchanges on top.
BroadcastFlags compute_flags(const Policy& policy, std::span<const DeviceState> states, long k,
                             const ThresholdSpec& threshold, const ScheduleSpec& schedule,
                             Rng& rng);

}  // namespace efhc
