#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "rescon/cli.hpp"
#include "rescon/config.hpp"

using namespace rescon;
namespace fs = std::filesystem;

namespace {

const std::string kRecipes = RESCON_RECIPE_DIR;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "rescon_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int invoke(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "rescon");
  std::vector<const char*> argv;
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  std::ostringstream log;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), log, err);
  if (err_text != nullptr) {
    *err_text = err.str();
  }
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> key_values(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) {
      kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
  }
  return kv;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.yaml";
  std::ofstream(p) << text;
  return p;
}

const char* kSmall = R"(
seed: 5
horizon: 200
algorithm: ddcc
graph: {generator: edge_list, edge_list: ring.txt}
initial: {values: [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]}
adversaries:
  - {node: 0, role: malicious, error: {kind: constant, value: 0.2}}
)";

void write_ring(const fs::path& dir) {
  std::ofstream(dir / "ring.txt") << "6\n0 1\n1 2\n2 3\n3 4\n4 5\n5 0\n0 3\n";
}

}  // namespace

TEST(Cli, RecipeRunWritesArtifacts) {
  const auto out = scratch("run");
  ASSERT_EQ(invoke({"run", "--config", kRecipes + "/fig1_ddcc.yaml", "--out", out.string(),
                    "--quiet"}),
            0);
  for (const char* f : {"trace.csv", "detections.csv", "summary.txt", "analysis.txt"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  auto first_line = [](const fs::path& p) {
    const auto text = slurp(p);
    return text.substr(0, text.find('\n'));
  };
  EXPECT_EQ(first_line(out / "trace.csv"), "k,node,state,eps,eta,pi,isolated");
  EXPECT_EQ(first_line(out / "detections.csv"), "k,detector,target,eps1,eps2,bound,violated");
}

TEST(Cli, SummaryTargetIsRecomputedFromInitials) {
  const auto out = scratch("target");
  ASSERT_EQ(invoke({"run", "--config", kRecipes + "/fig1_ddcc.yaml", "--out", out.string(),
                    "--quiet"}),
            0);
  auto kv = key_values(out / "summary.txt");
  std::istringstream nodes(kv.at("reporting_nodes"));
  double sum = 0.0;
  int count = 0;
  for (int i; nodes >> i; ++count) {
    sum += std::stod(kv.at("initial." + std::to_string(i)));
  }
  ASSERT_GT(count, 0);
  EXPECT_NEAR(std::stod(kv.at("target")), sum / count, 1e-15);
}

TEST(Cli, OutputsAreByteIdentical) {
  const auto a = scratch("same_a");
  const auto b = scratch("same_b");
  const auto cfg = kRecipes + "/fig3_sdcc.yaml";
  ASSERT_EQ(invoke({"run", "--config", cfg, "--out", a.string(), "--quiet"}), 0);
  ASSERT_EQ(invoke({"run", "--config", cfg, "--out", b.string(), "--quiet"}), 0);
  for (const char* f : {"trace.csv", "detections.csv", "summary.txt", "analysis.txt"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Cli, SeedOverrideChangesRun) {
  const auto a = scratch("seed_a");
  const auto b = scratch("seed_b");
  const auto cfg = kRecipes + "/fig3_sdcc.yaml";
  ASSERT_EQ(invoke({"run", "--config", cfg, "--out", a.string(), "--quiet"}), 0);
  ASSERT_EQ(invoke({"run", "--config", cfg, "--out", b.string(), "--seed", "99", "--quiet"}), 0);
  EXPECT_EQ(key_values(b / "summary.txt").at("seed"), "99");
  EXPECT_NE(slurp(a / "trace.csv"), slurp(b / "trace.csv"));
}

TEST(Cli, EdgeListRelativeToConfig) {
  const auto dir = scratch("edge_list");
  write_ring(dir);
  const auto cfg = write_config(dir, kSmall);
  ASSERT_EQ(invoke({"run", "--config", cfg.string(), "--out", (dir / "out").string(), "--quiet"}),
            0);
  EXPECT_EQ(key_values(dir / "out" / "summary.txt").at("edges"), "7");
}

TEST(Cli, AdjacentMisbehavingNodesExitThree) {
  const auto dir = scratch("adjacent");
  write_ring(dir);
  const auto cfg = write_config(
      dir, std::string(kSmall) + "  - {node: 1, role: faulty, error: {kind: constant, value: 0.1}}\n");
  std::string err;
  EXPECT_EQ(invoke({"run", "--config", cfg.string(), "--out", (dir / "out").string()}, &err), 3);
  EXPECT_NE(err.find("must not neighbor"), std::string::npos);
}

TEST(Cli, DisconnectedGraphExitThree) {
  const auto dir = scratch("disconnected");
  std::ofstream(dir / "ring.txt") << "6\n0 1\n1 2\n3 4\n4 5\n";
  const auto cfg = write_config(dir, kSmall);
  EXPECT_EQ(invoke({"run", "--config", cfg.string(), "--out", (dir / "out").string()}), 3);
}

TEST(Cli, ConfigErrorsExitTwo) {
  const auto dir = scratch("config_errors");
  EXPECT_EQ(invoke({"run", "--config", (dir / "missing.yaml").string()}), 2);
  write_ring(dir);
  auto cfg = write_config(dir, std::string(kSmall) + "runs: 0\n");
  EXPECT_EQ(invoke({"monte-carlo", "--config", cfg.string(), "--out", dir.string()}), 2);
  cfg = write_config(dir, std::string(kSmall) + "compare: [ddcc, bogus]\n");
  EXPECT_EQ(invoke({"compare", "--config", cfg.string(), "--out", dir.string()}), 2);
  cfg = write_config(dir, std::string(kSmall) + "colour: blue\n");
  EXPECT_EQ(invoke({"run", "--config", cfg.string(), "--out", dir.string()}), 2);
  cfg = write_config(dir, "seed: [1\n");
  EXPECT_EQ(invoke({"run", "--config", cfg.string(), "--out", dir.string()}), 2);
  EXPECT_EQ(invoke({"frobnicate"}), 2);
  EXPECT_EQ(invoke({"run"}), 2);
}

TEST(Cli, MonteCarloSmoke) {
  const auto dir = scratch("mc");
  write_ring(dir);
  const auto cfg = write_config(dir, std::string(kSmall) + "runs: 10\n");
  ASSERT_EQ(invoke({"monte-carlo", "--config", cfg.string(), "--out", dir.string(), "--quiet"}), 0);
  std::istringstream rows(slurp(dir / "runs.csv"));
  std::string line;
  int count = -1;
  while (std::getline(rows, line)) {
    ++count;
  }
  EXPECT_EQ(count, 10);
  EXPECT_EQ(key_values(dir / "summary.txt").at("runs"), "10");
}

TEST(Cli, ComparePlainWithoutAdversary) {
  const auto dir = scratch("compare");
  write_ring(dir);
  const std::string text = R"(
seed: 5
horizon: 400
compare: [plain]
graph: {generator: edge_list, edge_list: ring.txt}
initial: {values: [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]}
)";
  const auto cfg = write_config(dir, text);
  ASSERT_EQ(invoke({"compare", "--config", cfg.string(), "--out", dir.string(), "--quiet"}), 0);
  std::istringstream rows(slurp(dir / "comparison.csv"));
  std::string header;
  std::string row;
  std::getline(rows, header);
  std::getline(rows, row);
  EXPECT_EQ(header, "algorithm,final_value,target,abs_error,isolation");
  EXPECT_EQ(row.substr(0, 6), "plain,");
  std::string extra;
  EXPECT_FALSE(std::getline(rows, extra));
  const auto last = row.find_last_of(',');
  const auto prev = row.find_last_of(',', last - 1);
  EXPECT_LT(std::stod(row.substr(prev + 1, last - prev - 1)), 1e-9);
}

TEST(Config, ParsesEveryErrorKind) {
  const auto cfg = parse_config(R"(
seed: 1
graph: {nodes: 8, edge_probability: 0.9, seed: 2}
weights: {scheme: metropolis}
protocol: {alpha: 3}
adversaries:
  - {node: 0, error: {kind: cosine, amplitude: 0.3, frequency: 2}}
  - {node: 2, role: faulty, channel: echo, target: 3, window: {start: 1, end: 4},
     error: {kind: table, entries: [[1, 0.5], [3, -0.2]]}}
  - {node: 5, error: {kind: stochastic, theta: 0.5, components: [{weight: 1, mean: 0, variance: 1}]}}
)");
  EXPECT_EQ(cfg.run.weight_scheme, WeightScheme::metropolis);
  EXPECT_DOUBLE_EQ(cfg.run.protocol.delta, 6.0);
  ASSERT_EQ(cfg.run.adversaries.size(), 3U);
  EXPECT_EQ(cfg.run.adversaries[1].channel, AttackChannel::echo);
  EXPECT_EQ(window_of(cfg.run.adversaries[1].law).end, 4);
  EXPECT_TRUE(std::holds_alternative<StochasticErrorModel>(cfg.run.adversaries[2].law));
  EXPECT_THROW(parse_config("adversaries: [{node: 0, error: {kind: nope}}]"), ConfigError);
  EXPECT_THROW(parse_config("algorithm: msr"), ConfigError);
  EXPECT_THROW(parse_config("graph: {nodes: many}"), ConfigError);
}

TEST(Cli, BundledRecipesParse) {
  for (const char* r : {"fig1_ddcc", "fig3_sdcc", "table2_batch", "fig4_wasserstein"}) {
    EXPECT_NO_THROW(load_config(kRecipes + "/" + r + ".yaml")) << r;
  }
  EXPECT_EQ(load_config(kRecipes + "/table2_batch.yaml").run.runs, 1000U);
}
