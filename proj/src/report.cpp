#include "rescon/report.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "rescon/rng.hpp"

namespace rescon {

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string opt_round(const std::optional<std::int64_t>& k) {
  return k ? std::to_string(*k) : std::string("none");
}

std::string node_list(const std::vector<NodeId>& nodes) {
  return fmt::format("{}", fmt::join(nodes, " "));
}

void write_setup(std::ostream& out, const PreparedRun& p) {
  const RunConfig& c = p.config;
  fmt::print(out, "generator = {}\n", RandomStream::kGeneratorName);
  fmt::print(out, "seed = {}\n", c.seed);
  fmt::print(out, "algorithm = {}\n", to_string(c.algorithm));
  fmt::print(out, "nodes = {}\n", p.topology.size());
  fmt::print(out, "edges = {}\n", p.topology.edges().size());
  fmt::print(out, "graph_seed = {}\n", p.graph_seed ? std::to_string(*p.graph_seed) : "none");
  fmt::print(out, "weights = {}\n", to_string(p.weights.scheme()));
  if (p.weights.scheme() == WeightScheme::perron) {
    fmt::print(out, "gamma = {}\n", num(p.gamma));
  }
  fmt::print(out, "alpha = {}\nrho = {}\ndelta = {}\n", num(c.protocol.alpha),
             num(c.protocol.rho), num(c.protocol.delta));
  fmt::print(out, "link_reliability = {}\n", num(c.link_reliability));
  fmt::print(out, "horizon = {}\n", c.effective_horizon());
  for (const auto& adv : c.adversaries) {
    fmt::print(out, "adversary.{} = {} {}\n", adv.node, to_string(adv.role),
               to_string(adv.channel));
  }
  for (NodeId i = 0; i < p.initial.size(); ++i) {
    fmt::print(out, "initial.{} = {}\n", i, num(p.initial[i]));
  }
}

std::size_t misbehaving_count(const PreparedRun& p) {
  return static_cast<std::size_t>(
      std::count_if(p.roles.begin(), p.roles.end(), [](Role r) { return r != Role::normal; }));
}

const StochasticErrorModel* stochastic_law(const PreparedRun& p, NodeId node) {
  for (const auto& adv : p.config.adversaries) {
    if (adv.node == node) {
      return std::get_if<StochasticErrorModel>(&adv.law);
    }
  }
  return nullptr;
}

}  // namespace

double run_deviation_bound(const PreparedRun& prepared, const ExperimentSummary& summary) {
  const double n = static_cast<double>(prepared.topology.size());
  return deviation_bound(n * prepared.config.protocol.alpha, prepared.config.protocol.rho,
                         misbehaving_count(prepared), summary.reporting.size());
}

void write_trace_csv(std::ostream& out, const RoundTrace& trace) {
  out << "k,node,state,eps,eta,pi,isolated\n";
  for (const auto& r : trace.rounds) {
    for (NodeId i = 0; i < r.nodes.size(); ++i) {
      const auto& s = r.nodes[i];
      fmt::print(out, "{},{},{},{},{},{},{}\n", r.k, i, num(s.state), num(s.eps), num(s.eta),
                 s.pi ? 1 : 0, s.isolated_count);
    }
  }
}

void write_detections_csv(std::ostream& out, const RoundTrace& trace) {
  out << "k,detector,target,eps1,eps2,bound,violated\n";
  for (const auto& d : trace.detections) {
    fmt::print(out, "{},{},{},{},{},{},{}\n", d.round, d.detector, d.target, num(d.eps1),
               num(d.eps2), num(d.bound), d.violates_bound ? 1 : 0);
  }
}

void write_summary(std::ostream& out, const PreparedRun& prepared,
                   const ExperimentSummary& s) {
  write_setup(out, prepared);
  fmt::print(out, "reporting_nodes = {}\n", node_list(s.reporting));
  fmt::print(out, "final_value = {}\n", num(s.final_value));
  fmt::print(out, "target = {}\n", num(s.target));
  fmt::print(out, "abs_error = {}\n", num(s.abs_error));
  fmt::print(out, "max_node_error = {}\n", num(s.max_node_error));
  fmt::print(out, "residual_connected = {}\n", s.residual_connected);
  fmt::print(out, "convergence_round = {}\n", opt_round(s.convergence_round));
  for (NodeId i = 0; i < s.isolation_rounds.size(); ++i) {
    if (s.isolation_rounds[i]) {
      fmt::print(out, "isolated.{} = {}\n", i, *s.isolation_rounds[i]);
    }
  }
  for (const auto& m : s.misbehaving) {
    fmt::print(out, "misbehaving.{}.role = {}\n", m.node, to_string(m.role));
    fmt::print(out, "misbehaving.{}.isolation_round = {}\n", m.node, opt_round(m.isolation_round));
    fmt::print(out, "misbehaving.{}.exposure = {}\n", m.node, m.exposure);
    fmt::print(out, "misbehaving.{}.min_detections = {}\n", m.node, m.min_detections);
    for (const auto& [j, first] : m.first_detection) {
      fmt::print(out, "misbehaving.{}.first_detection.{} = {}\n", m.node, j, opt_round(first));
    }
  }
  for (NodeId i = 0; i < s.final_states.size(); ++i) {
    fmt::print(out, "final.{} = {}\n", i, num(s.final_states[i]));
  }
}

void write_batch_summary(std::ostream& out, const PreparedRun& prepared,
                         const BatchSummary& b) {
  write_setup(out, prepared);
  fmt::print(out, "runs = {}\n", b.runs);
  fmt::print(out, "batch_mean = {}\n", num(b.mean));
  fmt::print(out, "batch_variance = {}\n", num(b.variance));
  fmt::print(out, "target = {}\n", num(b.target));
  fmt::print(out, "abs_error = {}\n", num(std::abs(b.mean - b.target)));
}

void write_runs_csv(std::ostream& out, const BatchSummary& b) {
  out << "run,final_value,target,abs_error,residual_connected,misbehaving\n";
  for (const auto& r : b.per_run) {
    std::vector<std::string> parts;
    for (const auto& m : r.misbehaving) {
      parts.push_back(fmt::format("{}:iso={}:M={}", m.node, opt_round(m.isolation_round),
                                  m.min_detections));
    }
    fmt::print(out, "{},{},{},{},{},{}\n", r.run_index, num(r.final_value), num(r.target),
               num(r.abs_error), r.residual_connected ? 1 : 0, fmt::join(parts, " "));
  }
}

void write_comparison_csv(std::ostream& out, const std::vector<ExperimentSummary>& rows) {
  out << "algorithm,final_value,target,abs_error,isolation\n";
  for (const auto& r : rows) {
    std::vector<std::string> iso;
    for (NodeId i = 0; i < r.isolation_rounds.size(); ++i) {
      if (r.isolation_rounds[i]) {
        iso.push_back(fmt::format("{}@{}", i, *r.isolation_rounds[i]));
      }
    }
    fmt::print(out, "{},{},{},{},{}\n", to_string(r.algorithm), num(r.final_value),
               num(r.target), num(r.abs_error), fmt::join(iso, " "));
  }
}

void write_analysis(std::ostream& out, const PreparedRun& prepared,
                    const ExperimentSummary& s, const AnalysisToggles& toggles) {
  fmt::print(out, "consensus_error = {}\n", num(consensus_error(s)));
  if (toggles.bounds) {
    const double dev = run_deviation_bound(prepared, s);
    fmt::print(out, "deviation_bound = {}\n", num(dev));
    fmt::print(out, "deviation_within_bound = {}\n", consensus_error(s) <= dev);
    if (prepared.config.algorithm == Algorithm::sdcc) {
      const auto in = bound_inputs(s, prepared.config.adversaries,
                                   prepared.config.link_reliability);
      fmt::print(out, "variance_bound = {}\n", num(variance_bound(in)));
    }
  }
  if (toggles.wasserstein && prepared.config.algorithm == Algorithm::sdcc) {
    for (const auto& m : s.misbehaving) {
      const auto* model = stochastic_law(prepared, m.node);
      if (model == nullptr || m.min_detections == 0) {
        continue;
      }
      const double w = attack_compensation_distance(*model, m.min_detections);
      const double bound = wasserstein_bound_gmm(*model, m.min_detections);
      fmt::print(out, "wasserstein.{}.detections = {}\n", m.node, m.min_detections);
      fmt::print(out, "wasserstein.{}.distance = {}\n", m.node, num(w));
      fmt::print(out, "wasserstein.{}.bound = {}\n", m.node, num(bound));
      fmt::print(out, "wasserstein.{}.within_bound = {}\n", m.node, w <= bound + 1e-6);
    }
  }
}

void write_batch_analysis(std::ostream& out, const PreparedRun& prepared,
                          const BatchSummary& b, const AnalysisToggles& toggles) {
  const double sd = std::sqrt(b.variance);
  const double band = b.runs > 0 ? 3.0 * sd / std::sqrt(static_cast<double>(b.runs)) : 0.0;
  fmt::print(out, "batch_abs_error = {}\n", num(std::abs(b.mean - b.target)));
  fmt::print(out, "three_sigma_band = {}\n", num(band));
  fmt::print(out, "unbiased_within_band = {}\n", std::abs(b.mean - b.target) <= band);
  if (toggles.bounds) {
    double worst = 0.0;
    double worst_dev = 0.0;
    std::size_t dev_violations = 0;
    for (const auto& r : b.per_run) {
      const auto in = bound_inputs(r, prepared.config.adversaries,
                                   prepared.config.link_reliability);
      worst = std::max(worst, variance_bound(in));
      const double dev = run_deviation_bound(prepared, r);
      worst_dev = std::max(worst_dev, dev);
      if (r.abs_error > dev) {
        ++dev_violations;
      }
    }
    fmt::print(out, "variance_bound_worst_run = {}\n", num(worst));
    fmt::print(out, "variance_within_bound = {}\n", b.variance <= worst);
    fmt::print(out, "deviation_bound = {}\n", num(worst_dev));
    fmt::print(out, "deviation_violations = {}\n", dev_violations);
  }
  if (toggles.wasserstein && !b.per_run.empty()) {
    fmt::print(out, "wasserstein_source_run = {}\n", b.per_run.front().run_index);
    write_analysis(out, prepared, b.per_run.front(), {true, false, 0});
  }
}

bool write_cdf_grid_csv(std::ostream& out, const PreparedRun& prepared,
                        const ExperimentSummary& s, std::size_t points) {
  for (const auto& m : s.misbehaving) {
    const auto* model = stochastic_law(prepared, m.node);
    if (model == nullptr || m.min_detections == 0) {
      continue;
    }
    out << "x,attack_cdf,compensation_cdf\n";
    for (const auto& pt : cdf_grid(*model, m.min_detections, points)) {
      fmt::print(out, "{},{},{}\n", num(pt.x), num(pt.attack), num(pt.compensation));
    }
    return true;
  }
  return false;
}

}  // namespace rescon
