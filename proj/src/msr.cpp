#include "rescon/msr.hpp"

#include <algorithm>
#include <stdexcept>

namespace rescon {

double wmsr_update(double own, std::vector<double> neighbor_values, std::size_t trim) {
  std::sort(neighbor_values.begin(), neighbor_values.end());
  const auto above_begin = std::upper_bound(neighbor_values.begin(), neighbor_values.end(), own);
  const auto below_end = std::lower_bound(neighbor_values.begin(), neighbor_values.end(), own);
  const auto n_above = static_cast<std::size_t>(neighbor_values.end() - above_begin);
  const auto n_below = static_cast<std::size_t>(below_end - neighbor_values.begin());
  const std::size_t drop_low = std::min(trim, n_below);
  const std::size_t drop_high = std::min(trim, n_above);

  double sum = own;
  std::size_t count = 1;
  for (std::size_t l = drop_low; l + drop_high < neighbor_values.size(); ++l) {
    sum += neighbor_values[l];
    ++count;
  }
  return sum / static_cast<double>(count);
}

std::vector<double> step_wmsr(std::span<const double> states, const Topology& topology,
                              const MsrParams& params, std::span<const Role> roles,
                              std::span<const double> errors) {
  const std::size_t n = topology.size();
  if (states.size() != n || roles.size() != n || errors.size() != n) {
    throw std::invalid_argument("W-MSR inputs disagree on node count");
  }
  std::vector<double> next(n);
  std::vector<double> values;
  for (NodeId i = 0; i < n; ++i) {
    values.clear();
    for (NodeId l : topology.neighbors(i)) {
      values.push_back(states[l]);
    }
    next[i] = wmsr_update(states[i], values, params.trim);
    if (roles[i] != Role::normal) {
      next[i] += errors[i];
    }
  }
  return next;
}

}  // namespace rescon
