#include "rescon/protocol.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace rescon {

namespace {

double significant(double v) { return std::abs(v) > kDetectionTolerance ? v : 0.0; }

double echo_or_zero(const InformationSet& psi, NodeId l) {
  const auto it = psi.echoes.find(l);
  return it == psi.echoes.end() ? 0.0 : it->second;
}

void rebook_scheme4(NodeRuntime& j, NeighborRecord& rec, std::int64_t k) {
  const auto m = static_cast<std::int64_t>(rec.samples.size());
  const std::int64_t undetected = k - rec.baseline_round - m;
  double updated = 0.0;
  if (undetected != 0 && m > 0) {
    updated = -static_cast<double>(undetected) * (rec.sample_sum / static_cast<double>(m));
  }
  const double diff = updated - rec.scheme4;
  if (diff != 0.0) {
    j.ledger += diff;
    rec.scheme4 = updated;
  }
}

}  // namespace

LinkMask::LinkMask(std::size_t n, bool delivered) : n_(n), bits_(n * n, delivered ? 1 : 0) {}

void LinkMask::set(NodeId i, NodeId j, bool delivered) {
  bits_[i * n_ + j] = delivered ? 1 : 0;
  bits_[j * n_ + i] = delivered ? 1 : 0;
}

double detect_strategy_1(const NodeRuntime& j, const InformationSet& psi, double own_prev_state,
                         double w_ij) {
  return w_ij * (echo_or_zero(psi, j.id) - own_prev_state);
}

bool accepts_declared_input(const NodeRuntime& j, const InformationSet& psi, std::int64_t k) {
  if (!psi.flag) {
    return false;
  }
  if (std::abs(psi.declared_input) > j.params.bound(k)) {
    return false;
  }
  const auto it = j.records.find(psi.sender);
  if (it != j.records.end() && it->second.last_declared && it->second.last_declared_round == k - 1) {
    if (std::abs(psi.declared_input - *it->second.last_declared) > j.params.delta) {
      return false;
    }
  }
  return true;
}

double detect_strategy_2(const NodeRuntime& j, const InformationSet& psi,
                         const WeightMatrix& weights, double sender_prev_state, std::int64_t k) {
  const double predicted = mix_row(weights, psi.sender, sender_prev_state,
                                   [&](NodeId l) { return echo_or_zero(psi, l); });
  double residual = psi.state - predicted;
  if (psi.declared_input != 0.0 && accepts_declared_input(j, psi, k)) {
    residual -= psi.declared_input;
  }
  return residual;
}

void accrue_compensation_1_2(NodeRuntime& j, const DetectionOutcome& outcome) {
  const auto& rec = j.records.at(outcome.target);
  const double e1 = significant(outcome.eps1);
  const double e2 = significant(outcome.eps2);
  if (e1 != 0.0) {
    j.ledger -= e1;
  }
  if (e2 != 0.0) {
    j.ledger -= e2 / static_cast<double>(rec.neighbor_count);
  }
}

bool isolate_and_compensate_3(NodeRuntime& j, NodeId i, double x_i_now) {
  if (!j.isolated.insert(i).second) {
    return false;
  }
  const auto& rec = j.records.at(i);
  const double share = (x_i_now - rec.initial_state) / static_cast<double>(rec.neighbor_count);
  if (share != 0.0) {
    j.ledger += share;
  }
  return true;
}

void accrue_compensation_4(NodeRuntime& j, NodeId i, double share, std::int64_t k) {
  auto& rec = j.records.at(i);
  rec.samples.push_back(share);
  rec.sample_sum += share;
  rebook_scheme4(j, rec, k);
}

void refresh_compensation_4(NodeRuntime& j, NodeId i, std::int64_t k) {
  auto& rec = j.records.at(i);
  if (rec.flagged) {
    rebook_scheme4(j, rec, k);
  }
}

double select_compensation_input(NodeRuntime& j, std::int64_t k_next) {
  const double prev = j.input;
  if (j.ledger == 0.0) {
    j.input = 0.0;
    return 0.0;
  }
  const double cap = j.params.bound(k_next);
  const double magnitude = std::min({std::abs(j.ledger), cap, std::abs(prev) + j.params.delta});
  double eps = std::copysign(magnitude, j.ledger);
  if (std::abs(eps - prev) > j.params.delta) {
    // Only reachable on a sign flip: pull toward prev inside [0, eps].
    const double lo = std::max(std::min(0.0, eps), prev - j.params.delta);
    const double hi = std::min(std::max(0.0, eps), prev + j.params.delta);
    eps = lo <= hi ? std::clamp(eps, lo, hi) : 0.0;
  }
  j.ledger -= eps;
  j.input = eps;
  return eps;
}

ConsensusNetwork::ConsensusNetwork(Topology topology, WeightMatrix weights,
                                   std::span<const double> initial,
                                   std::span<const AdversarySpec> adversaries,
                                   std::span<const ProtocolParams> params)
    : topology_(std::move(topology)), weights_(std::move(weights)) {
  const std::size_t n = topology_.size();
  if (weights_.size() != n || initial.size() != n) {
    throw std::invalid_argument("topology, weights and initial states disagree on size");
  }
  if (params.size() != 1 && params.size() != n) {
    throw std::invalid_argument("protocol parameters must be global or per node");
  }
  nodes_.resize(n);
  channel_.assign(n, AttackChannel::update);
  target_.assign(n, std::nullopt);
  cut_off_.assign(n, false);
  isolation_round_.assign(n, std::nullopt);
  for (NodeId i = 0; i < n; ++i) {
    auto& node = nodes_[i];
    node.id = i;
    node.state = initial[i];
    node.params = params.size() == 1 ? params[0] : params[i];
  }
  for (const auto& adv : adversaries) {
    if (adv.node >= n) {
      throw std::invalid_argument(fmt::format("adversary node {} outside the graph", adv.node));
    }
    if (adv.role == Role::normal) {
      continue;
    }
    nodes_[adv.node].role = adv.role;
    channel_[adv.node] = adv.channel;
    target_[adv.node] = adv.target;
    if (adv.channel != AttackChannel::update &&
        (!adv.target || !topology_.has_edge(adv.node, *adv.target))) {
      throw std::invalid_argument(
          fmt::format("adversary {} needs a neighboring target for the {} channel", adv.node,
                      to_string(adv.channel)));
    }
  }
  for (NodeId j = 0; j < n; ++j) {
    if (nodes_[j].role != Role::normal) {
      continue;
    }
    for (NodeId i : topology_.neighbors(j)) {
      auto& rec = nodes_[j].records[i];
      rec.initial_state = initial[i];
      rec.neighbor_count = topology_.degree(i);
    }
  }
}

std::vector<double> ConsensusNetwork::states() const {
  std::vector<double> x(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    x[i] = nodes_[i].state;
  }
  return x;
}

RoundReport ConsensusNetwork::step(std::int64_t k, std::span<const double> errors,
                                   const LinkMask* mask, ProtocolMode mode) {
  const std::size_t n = nodes_.size();
  if (errors.size() != n) {
    throw std::invalid_argument("error vector size does not match the network");
  }
  RoundReport report;
  report.round = k;
  report.broadcasts.resize(n);
  const std::vector<double> prev = states();

  // State update and broadcast.
  for (NodeId i = 0; i < n; ++i) {
    if (cut_off_[i]) {
      continue;
    }
    auto& node = nodes_[i];
    InformationSet& psi = report.broadcasts[i];
    psi.sender = i;
    psi.flag = node.flag;
    std::size_t active_neighbors = 0;
    for (NodeId l : topology_.neighbors(i)) {
      if (!cut_off_[l]) {
        psi.echoes.emplace(l, prev[l]);
        ++active_neighbors;
      }
    }
    psi.neighbor_count = active_neighbors;
    double injected = 0.0;
    if (node.role == Role::normal) {
      injected = node.input;
      psi.declared_input = node.input;
    } else {
      const double e = errors[i];
      switch (channel_[i]) {
        case AttackChannel::update:
          injected = e;
          break;
        case AttackChannel::echo:
          if (e != 0.0) {
            if (auto it = psi.echoes.find(*target_[i]); it != psi.echoes.end()) {
              it->second += e;
            }
          }
          break;
        case AttackChannel::erase:
          if (e != 0.0) {
            psi.echoes.erase(*target_[i]);
          }
          break;
      }
    }
    psi.state = mix_row(weights_, i, prev[i], [&](NodeId l) { return echo_or_zero(psi, l); }) +
                injected;
  }
  for (NodeId i = 0; i < n; ++i) {
    if (!cut_off_[i]) {
      nodes_[i].state = report.broadcasts[i].state;
    }
  }

  // Detection, Schemes I, II and IV, isolation decisions.
  std::vector<NodeId> to_isolate;
  for (NodeId j = 0; j < n; ++j) {
    auto& node = nodes_[j];
    if (cut_off_[j] || node.role != Role::normal) {
      continue;
    }
    const double bound = node.params.bound(k);
    for (NodeId i : topology_.neighbors(j)) {
      if (cut_off_[i] || node.isolated.count(i) != 0) {
        continue;
      }
      if (mask != nullptr && !mask->delivered(i, j)) {
        continue;
      }
      auto& rec = node.records.at(i);
      const InformationSet& psi = report.broadcasts[i];
      DetectionOutcome out;
      out.round = k;
      out.detector = j;
      out.target = i;
      out.eps1 = detect_strategy_1(node, psi, prev[j], weights_(i, j));
      out.eps2 = detect_strategy_2(node, psi, weights_, prev[i], k);
      out.share = significant(out.eps1) +
                  significant(out.eps2) / static_cast<double>(rec.neighbor_count);
      out.bound = bound;
      out.violates_bound = std::abs(out.eps1 + out.eps2) > bound;
      accrue_compensation_1_2(node, out);

      const bool hit = out.nonzero();
      if (hit) {
        node.flag = true;
        if (!rec.first_detection) {
          rec.first_detection = k;
        }
      }
      if (mode == ProtocolMode::stochastic) {
        if (!rec.flagged) {
          if (hit) {
            rec.flagged = true;
            rec.baseline_round = rec.last_clean_round;
          } else {
            rec.last_clean_round = k;
          }
        }
        if (rec.flagged) {
          accrue_compensation_4(node, i, out.share, k);
        }
      }
      rec.last_declared = psi.declared_input;
      rec.last_declared_round = k;
      if (out.violates_bound) {
        report.broadcasts[j].isolation_notices.push_back(i);
        to_isolate.push_back(i);
      }
      if (hit || out.violates_bound) {
        report.detections.push_back(out);
      }
    }
  }

  // Isolation; notices reach every neighbor within the round.
  std::sort(to_isolate.begin(), to_isolate.end());
  to_isolate.erase(std::unique(to_isolate.begin(), to_isolate.end()), to_isolate.end());
  for (NodeId i : to_isolate) {
    for (NodeId j : topology_.neighbors(i)) {
      auto& node = nodes_[j];
      if (cut_off_[j] || node.role != Role::normal) {
        continue;
      }
      if (isolate_and_compensate_3(node, i, nodes_[i].state)) {
        node.flag = true;
        if (mode == ProtocolMode::stochastic) {
          refresh_compensation_4(node, i, k);
        }
      }
    }
    cut_off_[i] = true;
    isolation_round_[i] = k;
    weights_ = weights_.without_node(i);
    report.isolated_now.push_back(i);
  }

  // Inputs for round k+1.
  for (NodeId j = 0; j < n; ++j) {
    auto& node = nodes_[j];
    if (!cut_off_[j] && node.role == Role::normal) {
      select_compensation_input(node, k + 1);
    }
  }
  return report;
}

RoundReport step_ddcc(ConsensusNetwork& net, std::span<const double> errors, std::int64_t k) {
  return net.step(k, errors, nullptr, ProtocolMode::deterministic);
}

RoundReport step_sdcc(ConsensusNetwork& net, std::span<const double> errors,
                      const LinkMask& mask, std::int64_t k) {
  return net.step(k, errors, &mask, ProtocolMode::stochastic);
}

}  // namespace rescon
