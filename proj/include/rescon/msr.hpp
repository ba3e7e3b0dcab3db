#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rescon/adversary.hpp"
#include "rescon/graph.hpp"

namespace rescon {

struct MsrParams {
  std::size_t trim = 1;  ///< F, values discarded per side
};

/// One W-MSR round. Every node drops up to F neighbor values strictly above
/// its own (largest first) and up to F strictly below (smallest first), then
/// takes the equal-weight mean of itself and the survivors. Misbehaving nodes
/// (roles[i] != normal) follow the same rule and add errors[i] on top.
std::vector<double> step_wmsr(std::span<const double> states, const Topology& topology,
                              const MsrParams& params, std::span<const Role> roles,
                              std::span<const double> errors);

/// The normal-node update alone, exposed for direct checks.
double wmsr_update(double own, std::vector<double> neighbor_values, std::size_t trim);

}  // namespace rescon
