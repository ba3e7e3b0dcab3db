// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include <fmt/format.h>

#include "rescon/analysis.hpp"
#include "rescon/engine.hpp"
#include "rescon/report.hpp"

using namespace rescon;

namespace {

constexpr std::uint64_t kSeed = 3;  // same seed as the bundled recipes

GmmSpec attack_mixture() { return GmmSpec({{0.5, 0.05, 0.05}, {0.5, 0.15, 0.2}}); }

RunConfig deterministic_setup(Algorithm a) {
  RunConfig cfg;
  cfg.topology = ErdosRenyiSource{10, 0.7, kSeed};
  cfg.seed = kSeed;
  cfg.initial = UniformInitial{0.0, 2.0};
  cfg.protocol = {5.0, 0.9, 10.0};
  cfg.algorithm = a;
  cfg.horizon = 500;
  cfg.adversaries = {
      {.node = 0, .role = Role::malicious, .law = DeterministicErrorModel::cosine(0.5, 1.0)},
      {.node = 4, .role = Role::faulty, .law = DeterministicErrorModel::geometric(0.5, 0.6)}};
  return cfg;
}

RunConfig stochastic_setup() {
  RunConfig cfg = deterministic_setup(Algorithm::sdcc);
  cfg.horizon = 1000;
  cfg.link_reliability = 0.8;
  cfg.adversaries = {
      {.node = 0, .role = Role::malicious, .law = StochasticErrorModel(0.8, attack_mixture())},
      {.node = 4,
       .role = Role::faulty,
       .law = StochasticErrorModel(1.0, GmmSpec({{1.0, 0.1, 0.01}}), {.start = 0, .end = 9})}};
  return cfg;
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail, double secs) {
  fmt::print("[{}] criterion {}: {} ({:.2f} s) {}\n", pass ? "PASS" : "FAIL", id, name, secs,
             detail);
  std::fflush(stdout);
  if (!pass) {
    ++failures;
  }
}

void timed(int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  std::pair<bool, std::string> r;
  try {
    r = f();
  } catch (const std::exception& e) {
    r = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, name, r.first, r.second, secs);
}

std::int64_t first_bound_exit() {
  for (std::int64_t k = 0; k < 10000; ++k) {
    if (std::abs(0.5 * std::cos(static_cast<double>(k))) > 5.0 * std::pow(0.9, k)) {
      return k;
    }
  }
  return -1;
}

double significant(double v) { return std::abs(v) > kDetectionTolerance ? v : 0.0; }

}  // namespace

int main() {
  const PreparedRun det = prepare(deterministic_setup(Algorithm::ddcc));
  SingleRun ddcc;

  timed(1, "D-DCC exactness", [&] {
    ddcc = run_single(det, 0);
    const auto& s = ddcc.summary;
    const std::int64_t oracle = first_bound_exit();
    const bool ok = s.max_node_error < 1e-6 && s.isolation_rounds[0] == oracle &&
                    !s.isolation_rounds[4].has_value();
    return std::pair{ok, fmt::format("max |x_j(500) - target| = {:.3e} (< 1e-6); node 0 isolated "
                                     "at {} (oracle {}); node 4 isolated: {}",
                                     s.max_node_error,
                                     s.isolation_rounds[0] ? std::to_string(*s.isolation_rounds[0])
                                                           : "never",
                                     oracle, s.isolation_rounds[4].has_value())};
  });

  timed(2, "conservation ledger", [&] {
    const auto& trace = ddcc.trace;
    const auto& topo = det.topology;
    const std::size_t n = topo.size();
    // U(k): errors injected before round k minus what detections booked for them.
    std::vector<double> injected(trace.rounds.size(), 0.0);
    std::vector<double> booked(trace.rounds.size(), 0.0);
    RandomStream unused({.master_seed = 0, .purpose = "unused"});
    for (const auto& adv : det.config.adversaries) {
      const auto iso = ddcc.summary.isolation_rounds[adv.node];
      for (std::int64_t k = 0; k + 1 < static_cast<std::int64_t>(trace.rounds.size()); ++k) {
        if (!iso || k <= *iso) {
          injected[static_cast<std::size_t>(k) + 1] += error_at(adv.law, k, unused);
        }
      }
    }
    for (const auto& d : trace.detections) {
      booked[static_cast<std::size_t>(d.round) + 1] +=
          significant(d.eps1) + significant(d.eps2) / static_cast<double>(topo.degree(d.target));
    }
    double worst = 0.0;
    double u = 0.0;
    for (std::size_t k = 0; k < trace.rounds.size(); ++k) {
      u += injected[k] - booked[k];
      double lhs = 0.0;
      double rhs = u;
      for (NodeId i = 0; i < n; ++i) {
        const auto& node = trace.rounds[k].nodes[i];
        if (node.active) {
          lhs += node.state;
          rhs += det.initial[i];
        }
        if (det.roles[i] == Role::normal) {
          lhs += node.eta + node.eps;
        }
      }
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    return std::pair{worst < 1e-9,
                     fmt::format("max residual over {} rounds = {:.3e} (< 1e-9)",
                                 trace.rounds.size(), worst)};
  });

  timed(3, "S-DCC degeneracy at p = 1", [&] {
    RunConfig cfg = deterministic_setup(Algorithm::sdcc);
    cfg.horizon = 500;
    cfg.link_reliability = 1.0;
    const auto s = run_single(prepare(cfg), 0);
    bool same = s.trace.rounds.size() == ddcc.trace.rounds.size() &&
                s.trace.detections.size() == ddcc.trace.detections.size();
    for (std::size_t k = 0; same && k < s.trace.rounds.size(); ++k) {
      for (std::size_t i = 0; same && i < s.trace.rounds[k].nodes.size(); ++i) {
        const auto& a = s.trace.rounds[k].nodes[i];
        const auto& b = ddcc.trace.rounds[k].nodes[i];
        same = a.state == b.state && a.eps == b.eps && a.eta == b.eta && a.pi == b.pi &&
               a.isolated_count == b.isolated_count && a.active == b.active;
      }
    }
    for (std::size_t d = 0; same && d < s.trace.detections.size(); ++d) {
      const auto& a = s.trace.detections[d];
      const auto& b = ddcc.trace.detections[d];
      same = a.round == b.round && a.detector == b.detector && a.target == b.target &&
             a.eps1 == b.eps1 && a.eps2 == b.eps2;
    }
    return std::pair{same, fmt::format("{} rounds x {} nodes and {} detection events compared "
                                       "bit for bit",
                                       s.trace.rounds.size(), det.topology.size(),
                                       s.trace.detections.size())};
  });

  const PreparedRun sto = prepare([] {
    RunConfig c = stochastic_setup();
    c.runs = 1000;
    return c;
  }());

  timed(4, "S-DCC unbiasedness and variance", [&] {
    const auto batch = run_monte_carlo(sto);
    const double sd = std::sqrt(batch.variance);
    const double band = 3.0 * sd / std::sqrt(static_cast<double>(batch.runs));
    const double bias = std::abs(batch.mean - batch.target);
    double worst_bound = 0.0;
    std::size_t dev_fail = 0;
    double dev_bound = 0.0;
    for (const auto& r : batch.per_run) {
      worst_bound = std::max(
          worst_bound, variance_bound(bound_inputs(r, sto.config.adversaries, 0.8)));
      dev_bound = run_deviation_bound(sto, r);
      if (r.abs_error > dev_bound) {
        ++dev_fail;
      }
    }
    const bool ok = bias <= band && batch.variance <= worst_bound && dev_fail == 0;
    return std::pair{
        ok, fmt::format("R = {}: |mean - target| = {:.4e} <= 3 sd/sqrt(R) = {:.4e}; variance {:.4e} "
                        "<= bound {:.4e}; deviation bound {:.1f} violated by {} runs; mean {:.4f} "
                        "target {:.4f}",
                        batch.runs, bias, band, batch.variance, worst_bound, dev_bound, dev_fail,
                        batch.mean, batch.target)};
  });

  timed(5, "detection-time law", [&] {
    RunConfig cfg = stochastic_setup();
    cfg.horizon = 80;
    cfg.runs = 10000;
    const auto prepared = prepare(cfg);
    const auto batch = run_monte_carlo(prepared);
    double total = 0.0;
    std::size_t seen = 0;
    for (const auto& r : batch.per_run) {
      const auto& stats = r.misbehaving.front();
      const auto& [neighbor, first] = stats.first_detection.front();
      (void)neighbor;
      if (first) {
        total += static_cast<double>(*first + 1);
        ++seen;
      }
    }
    const double mean = total / static_cast<double>(seen);
    const double expected = 1.0 / (0.8 * 0.8);
    const double rel = std::abs(mean - expected) / expected;
    return std::pair{seen == batch.runs && rel <= 0.05,
                     fmt::format("{} runs, mean first detection {:.4f} vs 1/(p theta) = {:.4f} "
                                 "(relative gap {:.3f} <= 0.05)",
                                 seen, mean, expected, rel)};
  });

  timed(6, "Wasserstein distance and bound", [&] {
    const auto run = run_single(sto, 0);
    const auto& node0 = run.summary.misbehaving.front();
    const StochasticErrorModel model(0.8, attack_mixture());
    const std::size_t m = node0.min_detections;
    const double w = attack_compensation_distance(model, m);
    const double bound = wasserstein_bound_gmm(model, m);
    const bool soft = std::abs(w - 0.1245) <= 0.05;

    RandomStream rng({.master_seed = 2024, .purpose = "acceptance-gmm"});
    int dominated = 0;
    for (int t = 0; t < 100; ++t) {
      const int count = 1 + static_cast<int>(rng.uniform() * 4.0);
      std::vector<GmmComponent> comps;
      double total = 0.0;
      for (int c = 0; c < count; ++c) {
        comps.push_back({0.05 + rng.uniform(), rng.normal() * 0.5, 0.002 + rng.uniform()});
        total += comps.back().weight;
      }
      double acc = 0.0;
      for (int c = 0; c < count; ++c) {
        comps[c].weight = c + 1 == count ? 1.0 - acc : comps[c].weight / total;
        acc += comps[c].weight;
      }
      const StochasticErrorModel r(0.1 + 0.9 * rng.uniform(), GmmSpec(comps));
      const auto mm = static_cast<std::size_t>(1 + rng.uniform() * 80.0);
      if (attack_compensation_distance(r, mm) <= wasserstein_bound_gmm(r, mm) + 1e-6) {
        ++dominated;
      }
    }
    const bool ok = w <= bound + 1e-6 && soft && dominated == 100;
    return std::pair{ok, fmt::format("M = {}: W1 = {:.4f} <= bound {:.4f}; |W1 - 0.1245| = {:.4f} "
                                     "(<= 0.05); bound held on {}/100 random mixtures",
                                     m, w, bound, std::abs(w - 0.1245), dominated)};
  });

  timed(7, "baseline ordering against W-MSR", [&] {
    const auto wmsr = run_single(prepare(deterministic_setup(Algorithm::wmsr)), 0).summary;
    double lo = 1e300;
    double hi = -1e300;
    for (NodeId i = 0; i < det.initial.size(); ++i) {
      if (det.roles[i] == Role::normal) {
        lo = std::min(lo, det.initial[i]);
        hi = std::max(hi, det.initial[i]);
      }
    }
    const double d_err = ddcc.summary.abs_error;
    const bool ok = d_err < wmsr.abs_error && wmsr.final_value >= lo && wmsr.final_value <= hi;
    return std::pair{ok, fmt::format("D-DCC error {:.3e} < W-MSR error {:.3e}; W-MSR value {:.4f} "
                                     "in [{:.4f}, {:.4f}]",
                                     d_err, wmsr.abs_error, wmsr.final_value, lo, hi)};
  });

  timed(8, "no-adversary regression", [&] {
    std::string detail;
    bool ok = true;
    for (Algorithm a : {Algorithm::plain, Algorithm::ddcc, Algorithm::sdcc}) {
      RunConfig cfg = deterministic_setup(a);
      cfg.adversaries.clear();
      cfg.link_reliability = 1.0;
      const auto r = run_single(prepare(cfg), 0);
      bool zero = true;
      for (const auto& rec : r.trace.rounds) {
        for (const auto& s : rec.nodes) {
          zero = zero && s.eta == 0.0 && s.eps == 0.0;
        }
      }
      zero = zero && r.trace.detections.empty();
      const bool exact = r.summary.max_node_error < 1e-9;
      ok = ok && zero && exact;
      detail += fmt::format("{}: max error {:.2e}, ledgers zero {}; ", to_string(a),
                            r.summary.max_node_error, zero);
    }
    return std::pair{ok, detail};
  });

  fmt::print("{} of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
