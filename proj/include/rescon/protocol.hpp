#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "rescon/adversary.hpp"
#include "rescon/graph.hpp"

namespace rescon {

/// Detected errors at or below this magnitude count as zero.
inline constexpr double kDetectionTolerance = 1e-12;

/// Per-node tolerance parameters: the decaying bound alpha rho^k and the
/// steadiness limit delta on consecutive compensation inputs.
struct ProtocolParams {
  double alpha = 5.0;
  double rho = 0.9;
  double delta = 10.0;

  double bound(std::int64_t k) const { return alpha * std::pow(rho, static_cast<double>(k)); }
};

/// D-DCC runs Schemes I-III; S-DCC adds the mean-based Scheme IV.
enum class ProtocolMode { deterministic, stochastic };

/// Broadcast payload of node `sender` at the end of round k, i.e. Psi(k+1).
struct InformationSet {
  NodeId sender = 0;
  double state = 0.0;           ///< x_i(k+1)
  bool flag = false;            ///< pi_i(k+1)
  double declared_input = 0.0;  ///< eps_i(k)
  std::map<NodeId, double> echoes;  ///< x_l^(i)(k); a missing entry was deleted
  std::size_t neighbor_count = 0;
  std::vector<NodeId> isolation_notices;
};

struct DetectionOutcome {
  std::int64_t round = 0;
  NodeId detector = 0;
  NodeId target = 0;
  double eps1 = 0.0;   ///< Strategy I, echo audit
  double eps2 = 0.0;   ///< Strategy II, update-rule residual
  double share = 0.0;  ///< eps1 + eps2 / |N_target|, zeroed below tolerance
  double bound = 0.0;
  bool violates_bound = false;

  bool nonzero() const {
    return std::abs(eps1) > kDetectionTolerance || std::abs(eps2) > kDetectionTolerance;
  }
};

/// What node j remembers about neighbor i.
struct NeighborRecord {
  double initial_state = 0.0;      ///< x_i(0), exchanged honestly at start-up
  std::size_t neighbor_count = 0;  ///< |N_i| at start-up

  std::optional<double> last_declared;
  std::int64_t last_declared_round = -2;
  std::optional<std::int64_t> first_detection;

  // Scheme IV bookkeeping.
  bool flagged = false;
  std::int64_t baseline_round = -1;  ///< k_i^{j0}
  std::int64_t last_clean_round = -1;
  std::vector<double> samples;       ///< Omega_j^(i)
  double sample_sum = 0.0;
  double scheme4 = 0.0;              ///< current eta_j^{i(4)}

  std::size_t detections() const { return samples.size(); }
};

struct NodeRuntime {
  NodeId id = 0;
  Role role = Role::normal;
  ProtocolParams params;
  double state = 0.0;
  double ledger = 0.0;          ///< eta_j, compensation still owed
  double input = 0.0;           ///< eps_j(k) applied in the current round
  bool flag = false;            ///< pi_j
  std::map<NodeId, NeighborRecord> records;
  std::set<NodeId> isolated;
};

/// Per unordered pair delivery flags for one round.
class LinkMask {
 public:
  explicit LinkMask(std::size_t n = 0, bool delivered = true);

  std::size_t size() const { return n_; }
  bool delivered(NodeId i, NodeId j) const { return bits_[i * n_ + j] != 0; }
  void set(NodeId i, NodeId j, bool delivered);

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// sum_l w_il v_l over the nonzero entries of row i, self term first, then
/// neighbors in ascending order. Nodes and their auditors share this routine
/// so honest residuals cancel bit-for-bit.
template <typename NeighborValue>
double mix_row(const WeightMatrix& w, NodeId i, double self_value, NeighborValue&& value_of) {
  double sum = w(i, i) * self_value;
  for (NodeId l = 0; l < w.size(); ++l) {
    if (l != i && w(i, l) != 0.0) {
      sum += w(i, l) * value_of(l);
    }
  }
  return sum;
}

/// w_ij (x_j^(i)(k) - x_j(k)); a deleted echo reads as zero.
double detect_strategy_1(const NodeRuntime& j, const InformationSet& psi, double own_prev_state,
                         double w_ij);

/// Whether j nets the sender's declared input out of the residual: the
/// sender must raise its flag, stay within j's bound at round k, and move
/// by at most delta since the last declaration j saw.
bool accepts_declared_input(const NodeRuntime& j, const InformationSet& psi, std::int64_t k);

/// x_i(k+1) - sum_l w_il x_l^(i)(k), minus the declared input when accepted.
double detect_strategy_2(const NodeRuntime& j, const InformationSet& psi,
                         const WeightMatrix& weights, double sender_prev_state, std::int64_t k);

/// Schemes I and II: eta_j -= eps1 + eps2 / |N_i| (significant parts only).
void accrue_compensation_1_2(NodeRuntime& j, const DetectionOutcome& outcome);

/// Scheme III. Returns false (and changes nothing) if i was already isolated.
bool isolate_and_compensate_3(NodeRuntime& j, NodeId i, double x_i_now);

/// Scheme IV: appends `share` to Omega, recomputes
/// eta^{i(4)} = -(k - k^{j0} - m) * mean(Omega) and books the difference.
void accrue_compensation_4(NodeRuntime& j, NodeId i, double share, std::int64_t k);

/// Re-evaluates Scheme IV at round k without a new sample, so undetected
/// rounds up to an isolation are covered.
void refresh_compensation_4(NodeRuntime& j, NodeId i, std::int64_t k);

/// Releases sign(eta) min(|eta|, alpha rho^k_next, |eps_prev| + delta) from
/// the ledger and stores it as the node's next input.
double select_compensation_input(NodeRuntime& j, std::int64_t k_next);

struct RoundReport {
  std::int64_t round = 0;
  std::vector<InformationSet> broadcasts;  ///< indexed by sender; unset for cut-off nodes
  std::vector<DetectionOutcome> detections;  ///< nonzero or bound-violating only
  std::vector<NodeId> isolated_now;
};

/// Owns every node's runtime for one simulation and advances it round by
/// round. Rounds are processed as: state update and broadcast, detection on
/// delivered sets, Schemes I/II/IV, isolation with Scheme III, then input
/// selection for the next round.
class ConsensusNetwork {
 public:
  ConsensusNetwork(Topology topology, WeightMatrix weights, std::span<const double> initial,
                   std::span<const AdversarySpec> adversaries,
                   std::span<const ProtocolParams> params);

  /// errors[i] is the misbehaving node i's error at round k (ignored for
  /// normal nodes). `mask` may be null for reliable links.
  RoundReport step(std::int64_t k, std::span<const double> errors, const LinkMask* mask,
                   ProtocolMode mode);

  const Topology& topology() const { return topology_; }
  const WeightMatrix& weights() const { return weights_; }
  const std::vector<NodeRuntime>& nodes() const { return nodes_; }
  const NodeRuntime& node(NodeId i) const { return nodes_.at(i); }
  std::vector<double> states() const;
  bool is_cut_off(NodeId i) const { return cut_off_.at(i); }
  std::optional<std::int64_t> isolation_round(NodeId i) const { return isolation_round_.at(i); }

 private:
  Topology topology_;
  WeightMatrix weights_;
  std::vector<NodeRuntime> nodes_;
  std::vector<AttackChannel> channel_;
  std::vector<std::optional<NodeId>> target_;
  std::vector<bool> cut_off_;
  std::vector<std::optional<std::int64_t>> isolation_round_;
};

RoundReport step_ddcc(ConsensusNetwork& net, std::span<const double> errors, std::int64_t k);
RoundReport step_sdcc(ConsensusNetwork& net, std::span<const double> errors,
                      const LinkMask& mask, std::int64_t k);

}  // namespace rescon
