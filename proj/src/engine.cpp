#include "rescon/engine.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

#include <fmt/format.h>

namespace rescon {

namespace {

constexpr std::size_t kMaxGraphAttempts = 1000;

Topology resolve_topology(const RunConfig& cfg, PreparedRun& out) {
  return std::visit(
      [&](const auto& src) -> Topology {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, ErdosRenyiSource>) {
          const std::uint64_t base = src.seed.value_or(cfg.seed);
          for (std::size_t a = 0; a < kMaxGraphAttempts; ++a) {
            Topology t;
            try {
              t = generate_erdos_renyi(src.nodes, src.edge_probability, base + a);
            } catch (const std::invalid_argument& e) {
              throw ConfigError(e.what());
            }
            if (is_connected(t)) {
              out.graph_seed = base + a;
              out.graph_attempts = a + 1;
              return t;
            }
          }
          throw ValidationError(fmt::format(
              "no connected Erdos-Renyi graph after {} draws (n = {}, p = {})",
              kMaxGraphAttempts, src.nodes, src.edge_probability));
        } else if constexpr (std::is_same_v<T, EdgeListSource>) {
          try {
            return read_edge_list_file(src.path);
          } catch (const std::exception& e) {
            throw ConfigError(e.what());
          }
        } else {
          return src;
        }
      },
      cfg.topology);
}

void check_parameters(const RunConfig& cfg) {
  if (!(cfg.link_reliability >= 0.0 && cfg.link_reliability <= 1.0)) {
    throw ConfigError(fmt::format("link reliability {} outside [0, 1]", cfg.link_reliability));
  }
  if (cfg.runs == 0) {
    throw ConfigError("run count must be at least 1");
  }
  if (cfg.horizon && *cfg.horizon < 1) {
    throw ConfigError("horizon must be at least 1");
  }
  const auto& pp = cfg.protocol;
  if (!(pp.alpha > 0.0) || !(pp.rho >= 0.0 && pp.rho < 1.0) || !(pp.delta >= 0.0)) {
    throw ConfigError("protocol needs alpha > 0, 0 <= rho < 1 and delta >= 0");
  }
  if (!(cfg.convergence_tol > 0.0) || cfg.convergence_window < 1) {
    throw ConfigError("convergence tolerance must be positive and window at least 1");
  }
}

std::size_t min_detections(const ConsensusNetwork& net, NodeId i) {
  std::size_t m = std::numeric_limits<std::size_t>::max();
  bool any = false;
  for (NodeId j : net.topology().neighbors(i)) {
    const auto& node = net.node(j);
    if (node.role != Role::normal) {
      continue;
    }
    m = std::min(m, node.records.at(i).detections());
    any = true;
  }
  return any ? m : 0;
}

double spread_of(const std::vector<NodeSample>& samples) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : samples) {
    if (s.counted) {
      lo = std::min(lo, s.state);
      hi = std::max(hi, s.state);
    }
  }
  return hi >= lo ? hi - lo : 0.0;
}

}  // namespace

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::plain:
      return "plain";
    case Algorithm::ddcc:
      return "ddcc";
    case Algorithm::sdcc:
      return "sdcc";
    case Algorithm::wmsr:
      return "wmsr";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (auto a : {Algorithm::plain, Algorithm::ddcc, Algorithm::sdcc, Algorithm::wmsr}) {
    if (name == to_string(a)) {
      return a;
    }
  }
  return std::nullopt;
}

std::int64_t RunConfig::effective_horizon() const {
  if (horizon) {
    return *horizon;
  }
  return algorithm == Algorithm::sdcc ? 1000 : 500;
}

double mean_over(const std::vector<double>& values, const std::vector<NodeId>& nodes) {
  if (nodes.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double s = 0.0;
  for (NodeId i : nodes) {
    s += values.at(i);
  }
  return s / static_cast<double>(nodes.size());
}

PreparedRun prepare(const RunConfig& cfg) {
  check_parameters(cfg);
  PreparedRun out;
  out.config = cfg;
  out.topology = resolve_topology(cfg, out);
  const std::size_t n = out.topology.size();
  if (n == 0) {
    throw ConfigError("graph has no nodes");
  }
  if (!is_connected(out.topology)) {
    throw ValidationError("communication graph is disconnected");
  }

  out.roles.assign(n, Role::normal);
  std::set<NodeId> seen;
  for (const auto& adv : cfg.adversaries) {
    if (adv.node >= n) {
      throw ConfigError(fmt::format("adversary node {} outside [0, {})", adv.node, n));
    }
    if (!seen.insert(adv.node).second) {
      throw ConfigError(fmt::format("node {} listed as adversary twice", adv.node));
    }
    if (adv.channel != AttackChannel::update) {
      if (!adv.target || !out.topology.has_edge(adv.node, *adv.target)) {
        throw ConfigError(fmt::format("adversary {} uses the {} channel without a neighboring target",
                                      adv.node, to_string(adv.channel)));
      }
    }
    out.roles[adv.node] = adv.role;
  }
  for (const auto& [a, b] : out.topology.edges()) {
    if (out.roles[a] != Role::normal && out.roles[b] != Role::normal) {
      throw ValidationError(fmt::format(
          "misbehaving nodes {} and {} are adjacent; misbehaving nodes must not neighbor each other",
          a, b));
    }
  }

  try {
    if (cfg.weight_scheme == WeightScheme::perron) {
      out.gamma = cfg.gamma.value_or(default_gamma(out.topology));
      out.weights = perron_weights(out.topology, out.gamma);
    } else {
      out.weights = metropolis_weights(out.topology);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (const auto* values = std::get_if<std::vector<double>>(&cfg.initial)) {
    if (values->size() != n) {
      throw ConfigError(fmt::format("{} initial states given for {} nodes", values->size(), n));
    }
    out.initial = *values;
  } else {
    const auto& u = std::get<UniformInitial>(cfg.initial);
    if (!(u.lo < u.hi)) {
      throw ConfigError("uniform initial range needs lo < hi");
    }
    RandomStream rng({.master_seed = cfg.seed, .purpose = "initial"});
    out.initial.resize(n);
    for (auto& x : out.initial) {
      x = u.lo + (u.hi - u.lo) * rng.uniform();
    }
  }
  return out;
}

LinkMask sample_link_mask(const Topology& topology, double p, RandomStream& rng) {
  LinkMask mask(topology.size(), true);
  for (const auto& [a, b] : topology.edges()) {
    mask.set(a, b, rng.bernoulli(p));
  }
  return mask;
}

std::optional<std::int64_t> detect_convergence(const std::vector<double>& spreads, double tol,
                                               std::int64_t window) {
  std::int64_t streak = 0;
  for (std::size_t k = 0; k < spreads.size(); ++k) {
    streak = spreads[k] < tol ? streak + 1 : 0;
    if (streak >= window) {
      return static_cast<std::int64_t>(k) - window + 1;
    }
  }
  return std::nullopt;
}

std::optional<std::int64_t> detect_convergence(const RoundTrace& trace, double tol,
                                               std::int64_t window) {
  std::vector<double> spreads;
  spreads.reserve(trace.rounds.size());
  for (const auto& r : trace.rounds) {
    spreads.push_back(spread_of(r.nodes));
  }
  const auto first = detect_convergence(spreads, tol, window);
  if (!first || trace.rounds.empty()) {
    return first;
  }
  return trace.rounds[static_cast<std::size_t>(*first)].k;
}

SingleRun run_single(const PreparedRun& prepared, std::size_t run_index) {
  const RunConfig& cfg = prepared.config;
  const std::size_t n = prepared.topology.size();
  const std::int64_t horizon = cfg.effective_horizon();
  const bool protocol = cfg.algorithm == Algorithm::ddcc || cfg.algorithm == Algorithm::sdcc;

  std::vector<const AdversarySpec*> active_adv;
  std::vector<RandomStream> adv_rng;
  for (const auto& adv : cfg.adversaries) {
    if (adv.role != Role::normal) {
      active_adv.push_back(&adv);
      adv_rng.emplace_back(StreamId{.master_seed = cfg.seed,
                                    .purpose = "adversary",
                                    .node = adv.node,
                                    .run = run_index});
    }
  }
  RandomStream link_rng({.master_seed = cfg.seed, .purpose = "links", .node = 0, .run = run_index});

  std::vector<double> errors(n, 0.0);
  auto draw_errors = [&](std::int64_t k) {
    std::fill(errors.begin(), errors.end(), 0.0);
    for (std::size_t a = 0; a < active_adv.size(); ++a) {
      errors[active_adv[a]->node] = error_at(active_adv[a]->law, k, adv_rng[a]);
    }
  };

  SingleRun result;
  ExperimentSummary& summary = result.summary;
  summary.algorithm = cfg.algorithm;
  summary.run_index = run_index;
  summary.horizon = horizon;
  summary.initial = prepared.initial;
  summary.isolation_rounds.assign(n, std::nullopt);

  std::vector<double> spreads;
  spreads.reserve(static_cast<std::size_t>(horizon) + 1);
  std::vector<NodeSample> samples(n);
  auto emit = [&](std::int64_t k) {
    spreads.push_back(spread_of(samples));
    if (cfg.record_trace) {
      result.trace.rounds.push_back({k, samples});
    }
  };

  if (protocol) {
    ConsensusNetwork net(prepared.topology, prepared.weights, prepared.initial, cfg.adversaries,
                         std::span<const ProtocolParams>(&cfg.protocol, 1));
    auto snapshot = [&] {
      for (NodeId i = 0; i < n; ++i) {
        const auto& node = net.node(i);
        samples[i] = {node.state,         node.input, node.ledger, node.flag,
                      node.isolated.size(), !net.is_cut_off(i), !net.is_cut_off(i)};
      }
    };

    std::vector<MisbehaviorStats> stats;
    std::vector<bool> captured;
    for (const auto* adv : active_adv) {
      MisbehaviorStats s;
      s.node = adv->node;
      s.role = adv->role;
      const auto& w = window_of(adv->law);
      s.window_start = w.start;
      s.window_end = w.end.value_or(horizon - 1);
      stats.push_back(s);
      captured.push_back(false);
    }
    auto capture = [&](std::size_t a, std::int64_t exposure) {
      stats[a].exposure = exposure;
      stats[a].min_detections = min_detections(net, stats[a].node);
      captured[a] = true;
    };

    snapshot();
    emit(0);
    const LinkMask reliable(n, true);
    for (std::int64_t k = 0; k < horizon; ++k) {
      draw_errors(k);
      RoundReport report;
      if (cfg.algorithm == Algorithm::sdcc) {
        const LinkMask mask = sample_link_mask(prepared.topology, cfg.link_reliability, link_rng);
        report = step_sdcc(net, errors, mask, k);
      } else {
        report = step_ddcc(net, errors, k);
      }
      if (cfg.record_trace) {
        result.trace.detections.insert(result.trace.detections.end(), report.detections.begin(),
                                       report.detections.end());
      }
      for (std::size_t a = 0; a < stats.size(); ++a) {
        if (captured[a]) {
          continue;
        }
        const auto iso = net.isolation_round(stats[a].node);
        if (iso) {
          capture(a, *iso + 1);
        } else if (stats[a].role == Role::faulty && k == stats[a].window_end) {
          capture(a, k + 1);
        }
      }
      snapshot();
      emit(k + 1);
    }
    for (std::size_t a = 0; a < stats.size(); ++a) {
      if (!captured[a]) {
        capture(a, horizon);
      }
      stats[a].isolation_round = net.isolation_round(stats[a].node);
      for (NodeId j : net.topology().neighbors(stats[a].node)) {
        const auto& node = net.node(j);
        if (node.role == Role::normal) {
          stats[a].first_detection.emplace_back(j, node.records.at(stats[a].node).first_detection);
        }
      }
    }
    summary.misbehaving = std::move(stats);
    for (NodeId i = 0; i < n; ++i) {
      summary.isolation_rounds[i] = net.isolation_round(i);
      if (!net.is_cut_off(i)) {
        summary.reporting.push_back(i);
      }
      summary.final_ledgers.push_back(net.node(i).ledger + net.node(i).input);
    }
    summary.final_states = net.states();
  } else {
    std::vector<double> x = prepared.initial;
    auto snapshot = [&] {
      for (NodeId i = 0; i < n; ++i) {
        samples[i] = {x[i], 0.0, 0.0, false, 0, true, prepared.roles[i] != Role::malicious};
      }
    };
    snapshot();
    emit(0);
    std::vector<double> next(n);
    for (std::int64_t k = 0; k < horizon; ++k) {
      draw_errors(k);
      if (cfg.algorithm == Algorithm::wmsr) {
        x = step_wmsr(x, prepared.topology, cfg.msr, prepared.roles, errors);
      } else {
        for (NodeId i = 0; i < n; ++i) {
          next[i] = mix_row(prepared.weights, i, x[i], [&](NodeId l) { return x[l]; });
          if (prepared.roles[i] != Role::normal) {
            next[i] += errors[i];
          }
        }
        x.swap(next);
      }
      snapshot();
      emit(k + 1);
    }
    for (NodeId i = 0; i < n; ++i) {
      if (prepared.roles[i] != Role::malicious) {
        summary.reporting.push_back(i);
      }
    }
    summary.final_states = x;
    summary.final_ledgers.assign(n, 0.0);
  }

  summary.final_value = mean_over(summary.final_states, summary.reporting);
  summary.target = mean_over(summary.initial, summary.reporting);
  summary.abs_error = std::abs(summary.final_value - summary.target);
  for (NodeId i : summary.reporting) {
    summary.max_node_error =
        std::max(summary.max_node_error, std::abs(summary.final_states[i] - summary.target));
  }
  std::vector<bool> keep(n, false);
  for (NodeId i : summary.reporting) {
    keep[i] = true;
  }
  summary.residual_connected = is_connected(prepared.topology, keep);
  summary.convergence_round =
      detect_convergence(spreads, cfg.convergence_tol, cfg.convergence_window);
  return result;
}

SingleRun run_single(const RunConfig& cfg) { return run_single(prepare(cfg), 0); }

BatchSummary aggregate(std::vector<ExperimentSummary> runs) {
  BatchSummary batch;
  batch.runs = runs.size();
  std::sort(runs.begin(), runs.end(),
            [](const auto& a, const auto& b) { return a.run_index < b.run_index; });
  std::vector<double> values;
  std::vector<double> targets;
  for (const auto& r : runs) {
    values.push_back(r.final_value);
    targets.push_back(r.target);
  }
  std::sort(values.begin(), values.end());
  std::sort(targets.begin(), targets.end());
  if (!values.empty()) {
    const auto count = static_cast<double>(values.size());
    batch.mean = std::accumulate(values.begin(), values.end(), 0.0) / count;
    batch.target = std::accumulate(targets.begin(), targets.end(), 0.0) / count;
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) {
        ss += (v - batch.mean) * (v - batch.mean);
      }
      batch.variance = ss / (count - 1.0);
    }
  }
  batch.per_run = std::move(runs);
  return batch;
}

BatchSummary run_monte_carlo(const PreparedRun& prepared, unsigned threads) {
  PreparedRun quiet = prepared;
  quiet.config.record_trace = false;
  const std::size_t total = quiet.config.runs;
  std::vector<ExperimentSummary> results(total);

  if (threads == 0) {
    threads = std::max(1U, std::thread::hardware_concurrency());
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < total; r = next++) {
      results[r] = run_single(quiet, r).summary;
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
    for (auto& th : pool) {
      th.join();
    }
  }
  return aggregate(std::move(results));
}

BatchSummary run_monte_carlo(const RunConfig& cfg, unsigned threads) {
  return run_monte_carlo(prepare(cfg), threads);
}

}  // namespace rescon
