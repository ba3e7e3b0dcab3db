#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rescon/adversary.hpp"
#include "rescon/graph.hpp"
#include "rescon/msr.hpp"
#include "rescon/protocol.hpp"
#include "rescon/rng.hpp"

namespace rescon {

/// Malformed or out-of-range configuration (CLI exit 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed configuration that breaks a modelling assumption, such as
/// adjacent misbehaving nodes or a disconnected graph (CLI exit 3).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Algorithm { plain, ddcc, sdcc, wmsr };

const char* to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view name);

struct ErdosRenyiSource {
  std::size_t nodes = 10;
  double edge_probability = 0.7;
  std::optional<std::uint64_t> seed;  ///< defaults to the master seed
};

struct EdgeListSource {
  std::string path;
};

using TopologySource = std::variant<ErdosRenyiSource, EdgeListSource, Topology>;

struct UniformInitial {
  double lo = 0.0;
  double hi = 2.0;
};

using InitialSource = std::variant<UniformInitial, std::vector<double>>;

struct RunConfig {
  TopologySource topology = ErdosRenyiSource{};
  WeightScheme weight_scheme = WeightScheme::perron;
  std::optional<double> gamma;  ///< Perron step; 0.9 / d_max when unset
  InitialSource initial = UniformInitial{};
  std::vector<AdversarySpec> adversaries;
  Algorithm algorithm = Algorithm::ddcc;
  ProtocolParams protocol;
  double link_reliability = 1.0;
  std::optional<std::int64_t> horizon;  ///< 500 (1000 for sdcc) when unset
  std::uint64_t seed = 1;
  std::size_t runs = 1;
  MsrParams msr;
  bool record_trace = true;
  double convergence_tol = 1e-6;
  std::int64_t convergence_window = 10;

  std::int64_t effective_horizon() const;
};

/// A RunConfig with every random or file-backed input resolved.
struct PreparedRun {
  RunConfig config;
  Topology topology;
  std::optional<std::uint64_t> graph_seed;  ///< seed that produced a connected graph
  std::size_t graph_attempts = 0;
  WeightMatrix weights;
  double gamma = 0.0;
  std::vector<double> initial;
  std::vector<Role> roles;
};

/// Resolves topology (resampling Erdos-Renyi draws until connected), weights
/// and initial states, and checks every assumption. Throws ConfigError or
/// ValidationError.
PreparedRun prepare(const RunConfig& cfg);

struct NodeSample {
  double state = 0.0;
  double eps = 0.0;  ///< input applied in this round
  double eta = 0.0;  ///< ledger after that input was reserved
  bool pi = false;
  std::size_t isolated_count = 0;
  bool active = true;
  bool counted = true;  ///< contributes to the consensus spread
};

struct RoundRecord {
  std::int64_t k = 0;
  std::vector<NodeSample> nodes;
};

struct RoundTrace {
  std::vector<RoundRecord> rounds;
  std::vector<DetectionOutcome> detections;
};

struct MisbehaviorStats {
  NodeId node = 0;
  Role role = Role::malicious;
  std::optional<std::int64_t> isolation_round;
  /// Rounds the node could inject errors before it stopped: isolation round
  /// + 1, or the horizon when never isolated.
  std::int64_t exposure = 0;
  /// min over normal neighbors of the detections stored for this node, taken
  /// at isolation (malicious) or at the end of the active window (faulty).
  std::size_t min_detections = 0;
  std::int64_t window_start = 0;
  std::int64_t window_end = 0;
  std::vector<std::pair<NodeId, std::optional<std::int64_t>>> first_detection;
};

struct ExperimentSummary {
  Algorithm algorithm = Algorithm::ddcc;
  std::size_t run_index = 0;
  std::int64_t horizon = 0;
  std::vector<NodeId> reporting;  ///< nodes the consensus value is taken over
  double final_value = 0.0;
  double target = 0.0;
  double abs_error = 0.0;
  double max_node_error = 0.0;
  std::vector<std::optional<std::int64_t>> isolation_rounds;
  bool residual_connected = true;
  std::optional<std::int64_t> convergence_round;
  std::vector<MisbehaviorStats> misbehaving;
  std::vector<double> initial;
  std::vector<double> final_states;
  std::vector<double> final_ledgers;
};

struct SingleRun {
  RoundTrace trace;
  ExperimentSummary summary;
};

SingleRun run_single(const PreparedRun& prepared, std::size_t run_index = 0);
SingleRun run_single(const RunConfig& cfg);

struct BatchSummary {
  std::size_t runs = 0;
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased sample variance of final values
  double target = 0.0;
  std::vector<ExperimentSummary> per_run;
};

/// R independent runs sharing topology and initial states; run r draws from
/// streams keyed by (master seed, r). `threads` = 0 picks the hardware count.
BatchSummary run_monte_carlo(const PreparedRun& prepared, unsigned threads = 0);
BatchSummary run_monte_carlo(const RunConfig& cfg, unsigned threads = 0);

/// Aggregates per-run summaries; the order of `runs` does not matter.
BatchSummary aggregate(std::vector<ExperimentSummary> runs);

/// One symmetric Bernoulli(p) draw per edge, in edge order.
LinkMask sample_link_mask(const Topology& topology, double p, RandomStream& rng);

/// First round from which the spread of counted states stays below `tol`
/// for `window` consecutive rounds.
std::optional<std::int64_t> detect_convergence(const RoundTrace& trace, double tol,
                                               std::int64_t window);
std::optional<std::int64_t> detect_convergence(const std::vector<double>& spreads, double tol,
                                               std::int64_t window);

/// Target mean over `nodes` of the recorded initial states.
double mean_over(const std::vector<double>& values, const std::vector<NodeId>& nodes);

}  // namespace rescon
