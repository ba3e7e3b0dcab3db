#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "rescon/engine.hpp"

using namespace rescon;

namespace {

RunConfig base_config(Algorithm a) {
  RunConfig cfg;
  cfg.topology = ErdosRenyiSource{10, 0.7, 3};
  cfg.seed = 3;
  cfg.algorithm = a;
  cfg.adversaries = {
      {.node = 0, .role = Role::malicious, .law = DeterministicErrorModel::cosine(0.5, 1.0)},
      {.node = 4, .role = Role::faulty, .law = DeterministicErrorModel::geometric(0.5, 0.6)}};
  return cfg;
}

RunConfig stochastic_config(double p) {
  RunConfig cfg = base_config(Algorithm::sdcc);
  cfg.link_reliability = p;
  cfg.adversaries = {
      {.node = 0,
       .role = Role::malicious,
       .law = StochasticErrorModel(0.8, GmmSpec({{0.5, 0.05, 0.05}, {0.5, 0.15, 0.2}}))},
      {.node = 4,
       .role = Role::faulty,
       .law = StochasticErrorModel(1.0, GmmSpec({{1.0, 0.1, 0.01}}), {.start = 0, .end = 9})}};
  return cfg;
}

}  // namespace

TEST(Engine, PlainTriangleReachesAverage) {
  RunConfig cfg;
  cfg.topology = Topology(3, {{0, 1}, {1, 2}, {0, 2}});
  cfg.initial = std::vector<double>{0.0, 1.0, 2.0};
  cfg.algorithm = Algorithm::plain;
  const auto r = run_single(cfg);
  EXPECT_NEAR(r.summary.final_value, 1.0, 1e-9);
  for (double v : r.summary.final_states) {
    EXPECT_NEAR(v, 1.0, 1e-9);
  }
  EXPECT_EQ(r.summary.convergence_round.has_value(), true);
}

TEST(Engine, HorizonDefaults) {
  EXPECT_EQ(base_config(Algorithm::ddcc).effective_horizon(), 500);
  EXPECT_EQ(base_config(Algorithm::sdcc).effective_horizon(), 1000);
}

TEST(Engine, PrepareResamplesUntilConnected) {
  RunConfig cfg;
  cfg.topology = ErdosRenyiSource{12, 0.2, 100};
  const auto p = prepare(cfg);
  EXPECT_TRUE(is_connected(p.topology));
  ASSERT_TRUE(p.graph_seed.has_value());
  EXPECT_EQ(*p.graph_seed, 100 + p.graph_attempts - 1);
  EXPECT_EQ(generate_erdos_renyi(12, 0.2, *p.graph_seed), p.topology);
}

TEST(Engine, AdjacentMisbehavingNodesRejected) {
  RunConfig cfg = base_config(Algorithm::ddcc);
  const auto t = prepare(cfg).topology;
  const NodeId neighbor = t.neighbors(0).front();
  cfg.adversaries[1].node = neighbor;
  EXPECT_THROW(prepare(cfg), ValidationError);
}

TEST(Engine, DisconnectedGraphRejected) {
  RunConfig cfg;
  cfg.topology = Topology(4, {{0, 1}, {2, 3}});
  EXPECT_THROW(prepare(cfg), ValidationError);
}

TEST(Engine, MalformedParametersRejected) {
  RunConfig cfg = base_config(Algorithm::ddcc);
  cfg.runs = 0;
  EXPECT_THROW(prepare(cfg), ConfigError);
  cfg = base_config(Algorithm::ddcc);
  cfg.initial = std::vector<double>{1.0, 2.0};
  EXPECT_THROW(prepare(cfg), ConfigError);
  cfg = base_config(Algorithm::ddcc);
  cfg.link_reliability = 1.5;
  EXPECT_THROW(prepare(cfg), ConfigError);
  cfg = base_config(Algorithm::ddcc);
  cfg.gamma = 10.0;
  EXPECT_THROW(prepare(cfg), ConfigError);
}

TEST(Engine, InitialStatesInRange) {
  const auto p = prepare(base_config(Algorithm::ddcc));
  for (double x : p.initial) {
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 2.0);
  }
}

TEST(Engine, RunsAreReproducible) {
  const auto a = run_single(stochastic_config(0.8));
  const auto b = run_single(stochastic_config(0.8));
  ASSERT_EQ(a.trace.rounds.size(), b.trace.rounds.size());
  for (std::size_t r = 0; r < a.trace.rounds.size(); ++r) {
    for (std::size_t i = 0; i < 10; ++i) {
      ASSERT_EQ(a.trace.rounds[r].nodes[i].state, b.trace.rounds[r].nodes[i].state);
      ASSERT_EQ(a.trace.rounds[r].nodes[i].eta, b.trace.rounds[r].nodes[i].eta);
    }
  }
  EXPECT_EQ(a.trace.detections.size(), b.trace.detections.size());
}

TEST(Engine, TraceShapeAndFrozenIsolatedNodes) {
  const auto r = run_single(base_config(Algorithm::ddcc));
  ASSERT_EQ(r.trace.rounds.size(), 501U);
  const auto iso = r.summary.isolation_rounds[0];
  ASSERT_TRUE(iso.has_value());
  for (std::size_t k = 0; k < r.trace.rounds.size(); ++k) {
    const auto& rec = r.trace.rounds[k];
    EXPECT_EQ(rec.k, static_cast<std::int64_t>(k));
    ASSERT_EQ(rec.nodes.size(), 10U);
    if (static_cast<std::int64_t>(k) > *iso + 1) {
      EXPECT_FALSE(rec.nodes[0].active);
      EXPECT_EQ(rec.nodes[0].state, r.trace.rounds[k - 1].nodes[0].state);
    }
  }
  EXPECT_FALSE(r.summary.isolation_rounds[4].has_value());
  EXPECT_TRUE(r.summary.residual_connected);
}

TEST(Engine, ReliableStochasticRunMatchesDeterministic) {
  auto s = base_config(Algorithm::sdcc);
  s.horizon = 500;
  const auto a = run_single(base_config(Algorithm::ddcc));
  const auto b = run_single(s);
  EXPECT_EQ(a.summary.final_states, b.summary.final_states);
  EXPECT_EQ(a.summary.isolation_rounds, b.summary.isolation_rounds);
}

TEST(LinkMasks, Extremes) {
  const auto t = generate_erdos_renyi(6, 1.0, 1);
  RandomStream rng({.master_seed = 1, .purpose = "links"});
  const auto all = sample_link_mask(t, 1.0, rng);
  const auto none = sample_link_mask(t, 0.0, rng);
  for (const auto& [a, b] : t.edges()) {
    EXPECT_TRUE(all.delivered(a, b));
    EXPECT_FALSE(none.delivered(b, a));
  }
}

TEST(LinkMasks, DeliveryRate) {
  const Topology t(2, {{0, 1}});
  RandomStream rng({.master_seed = 2, .purpose = "links"});
  int delivered = 0;
  const int rounds = 100000;
  for (int k = 0; k < rounds; ++k) {
    const auto m = sample_link_mask(t, 0.8, rng);
    ASSERT_EQ(m.delivered(0, 1), m.delivered(1, 0));
    delivered += m.delivered(0, 1) ? 1 : 0;
  }
  EXPECT_NEAR(delivered / static_cast<double>(rounds), 0.8, 0.005);
}

TEST(Convergence, Detection) {
  RoundTrace flat;
  for (std::int64_t k = 0; k < 5; ++k) {
    flat.rounds.push_back({k, std::vector<NodeSample>(3, NodeSample{.state = 1.0})});
  }
  EXPECT_EQ(detect_convergence(flat, 1e-9, 3), 0);

  RunConfig plain = base_config(Algorithm::plain);
  plain.adversaries.clear();
  const auto r = run_single(plain);
  const auto k = detect_convergence(r.trace, 1e-6, 10);
  ASSERT_TRUE(k.has_value());
  EXPECT_LT(*k, 500);
  EXPECT_EQ(k, r.summary.convergence_round);

  auto cut = stochastic_config(0.0);
  cut.adversaries[0].law = DeterministicErrorModel::constant(0.05);
  const auto drift = run_single(cut);
  EXPECT_FALSE(detect_convergence(drift.trace, 1e-6, 10).has_value());
}

TEST(MonteCarlo, SingleRunBatch) {
  auto cfg = stochastic_config(0.8);
  cfg.horizon = 200;
  const auto prepared = prepare(cfg);
  const auto batch = run_monte_carlo(prepared, 1);
  ASSERT_EQ(batch.runs, 1U);
  EXPECT_EQ(batch.mean, run_single(prepared, 0).summary.final_value);
  EXPECT_EQ(batch.variance, 0.0);
}

TEST(MonteCarlo, ThreadCountAndOrderDoNotMatter) {
  auto cfg = stochastic_config(0.8);
  cfg.horizon = 200;
  cfg.runs = 24;
  const auto prepared = prepare(cfg);
  const auto one = run_monte_carlo(prepared, 1);
  const auto many = run_monte_carlo(prepared, 4);
  EXPECT_EQ(one.mean, many.mean);
  EXPECT_EQ(one.variance, many.variance);
  for (std::size_t r = 0; r < 24; ++r) {
    EXPECT_EQ(one.per_run[r].final_value, many.per_run[r].final_value);
  }
  auto shuffled = one.per_run;
  std::reverse(shuffled.begin(), shuffled.end());
  std::rotate(shuffled.begin(), shuffled.begin() + 5, shuffled.end());
  const auto again = aggregate(shuffled);
  EXPECT_EQ(again.mean, one.mean);
  EXPECT_EQ(again.variance, one.variance);
}

TEST(MonteCarlo, RunsDiffer) {
  auto cfg = stochastic_config(0.8);
  cfg.horizon = 200;
  cfg.runs = 4;
  const auto batch = run_monte_carlo(cfg, 1);
  EXPECT_NE(batch.per_run[0].final_value, batch.per_run[1].final_value);
  EXPECT_EQ(batch.per_run[0].initial, batch.per_run[3].initial);
}
