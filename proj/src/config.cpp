#include "rescon/config.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace rescon {

namespace {

void allow_keys(const YAML::Node& node, std::string_view where,
                std::initializer_list<std::string_view> keys) {
  if (!node.IsMap()) {
    throw ConfigError(fmt::format("'{}' must be a mapping", where));
  }
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    bool known = false;
    for (auto k : keys) {
      known = known || key == k;
    }
    if (!known) {
      throw ConfigError(fmt::format("unknown key '{}' in '{}'", key, where));
    }
  }
}

template <typename T>
T get(const YAML::Node& node, std::string_view where) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(fmt::format("'{}' has the wrong type", where));
  }
}

template <typename T>
void maybe(const YAML::Node& parent, const char* key, std::string_view where, T& out) {
  if (const auto n = parent[key]) {
    out = get<T>(n, fmt::format("{}.{}", where, key));
  }
}

NodeId node_id(const YAML::Node& n, std::string_view where) {
  const auto v = get<long long>(n, where);
  if (v < 0) {
    throw ConfigError(fmt::format("'{}' must be a nonnegative node id", where));
  }
  return static_cast<NodeId>(v);
}

ActiveWindow parse_window(const YAML::Node& n) {
  ActiveWindow w;
  if (!n) {
    return w;
  }
  allow_keys(n, "window", {"start", "end"});
  maybe(n, "start", "window", w.start);
  if (n["end"]) {
    w.end = get<std::int64_t>(n["end"], "window.end");
    if (*w.end < w.start) {
      throw ConfigError("window.end precedes window.start");
    }
  }
  return w;
}

ErrorLaw parse_error(const YAML::Node& n, const ActiveWindow& window) {
  if (!n || !n["kind"]) {
    throw ConfigError("adversary needs an 'error' block with a 'kind'");
  }
  const auto kind = get<std::string>(n["kind"], "error.kind");
  if (kind == "cosine") {
    allow_keys(n, "error", {"kind", "amplitude", "frequency"});
    double a = 0.5;
    double f = 1.0;
    maybe(n, "amplitude", "error", a);
    maybe(n, "frequency", "error", f);
    return DeterministicErrorModel::cosine(a, f, window);
  }
  if (kind == "geometric") {
    allow_keys(n, "error", {"kind", "amplitude", "ratio"});
    double a = 0.5;
    double r = 0.6;
    maybe(n, "amplitude", "error", a);
    maybe(n, "ratio", "error", r);
    return DeterministicErrorModel::geometric(a, r, window);
  }
  if (kind == "constant") {
    allow_keys(n, "error", {"kind", "value"});
    double v = 0.0;
    maybe(n, "value", "error", v);
    return DeterministicErrorModel::constant(v, window);
  }
  if (kind == "table") {
    allow_keys(n, "error", {"kind", "entries"});
    std::vector<std::pair<std::int64_t, double>> entries;
    if (const auto e = n["entries"]) {
      for (const auto& row : e) {
        if (!row.IsSequence() || row.size() != 2) {
          throw ConfigError("error.entries rows must be [round, value]");
        }
        entries.emplace_back(get<std::int64_t>(row[0], "error.entries"),
                             get<double>(row[1], "error.entries"));
      }
    }
    return DeterministicErrorModel::from_table(std::move(entries), window);
  }
  if (kind == "stochastic") {
    allow_keys(n, "error", {"kind", "theta", "components"});
    double theta = 1.0;
    maybe(n, "theta", "error", theta);
    std::vector<GmmComponent> comps;
    if (!n["components"] || !n["components"].IsSequence()) {
      throw ConfigError("stochastic error needs a 'components' list");
    }
    for (const auto& c : n["components"]) {
      allow_keys(c, "error.components", {"weight", "mean", "variance"});
      GmmComponent g;
      maybe(c, "weight", "error.components", g.weight);
      maybe(c, "mean", "error.components", g.mean);
      maybe(c, "variance", "error.components", g.variance);
      comps.push_back(g);
    }
    try {
      return StochasticErrorModel(theta, GmmSpec(std::move(comps)), window);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  throw ConfigError(fmt::format("unknown error kind '{}'", kind));
}

AdversarySpec parse_adversary(const YAML::Node& n) {
  allow_keys(n, "adversaries[]", {"node", "role", "channel", "target", "window", "error"});
  AdversarySpec a;
  if (!n["node"]) {
    throw ConfigError("adversary needs a 'node'");
  }
  a.node = node_id(n["node"], "adversaries[].node");
  const auto role = n["role"] ? get<std::string>(n["role"], "role") : std::string("malicious");
  if (role == "malicious") {
    a.role = Role::malicious;
  } else if (role == "faulty") {
    a.role = Role::faulty;
  } else {
    throw ConfigError(fmt::format("unknown role '{}'", role));
  }
  const auto channel =
      n["channel"] ? get<std::string>(n["channel"], "channel") : std::string("update");
  if (channel == "update") {
    a.channel = AttackChannel::update;
  } else if (channel == "echo") {
    a.channel = AttackChannel::echo;
  } else if (channel == "erase") {
    a.channel = AttackChannel::erase;
  } else {
    throw ConfigError(fmt::format("unknown channel '{}'", channel));
  }
  if (n["target"]) {
    a.target = node_id(n["target"], "adversaries[].target");
  }
  a.law = parse_error(n["error"], parse_window(n["window"]));
  return a;
}

Algorithm algorithm_named(const std::string& name) {
  const auto a = parse_algorithm(name);
  if (!a) {
    throw ConfigError(fmt::format("unknown algorithm '{}'", name));
  }
  return *a;
}

ExperimentConfig from_yaml(const YAML::Node& root, const std::string& base_dir) {
  ExperimentConfig cfg;
  RunConfig& run = cfg.run;
  if (!root || root.IsNull()) {
    throw ConfigError("configuration is empty");
  }
  allow_keys(root, "<root>",
             {"seed", "horizon", "runs", "algorithm", "compare", "graph", "weights", "initial",
              "protocol", "msr", "adversaries", "analysis", "output", "convergence"});

  maybe(root, "seed", "<root>", run.seed);
  if (root["horizon"]) {
    run.horizon = get<std::int64_t>(root["horizon"], "horizon");
  }
  if (root["runs"]) {
    const auto r = get<long long>(root["runs"], "runs");
    if (r < 1) {
      throw ConfigError("runs must be at least 1");
    }
    run.runs = static_cast<std::size_t>(r);
  }
  if (root["algorithm"]) {
    run.algorithm = algorithm_named(get<std::string>(root["algorithm"], "algorithm"));
  }
  if (const auto c = root["compare"]) {
    for (const auto& a : c) {
      cfg.compare.push_back(algorithm_named(get<std::string>(a, "compare[]")));
    }
  }

  if (const auto g = root["graph"]) {
    allow_keys(g, "graph", {"generator", "nodes", "edge_probability", "seed", "edge_list"});
    const auto gen =
        g["generator"] ? get<std::string>(g["generator"], "graph.generator") : "erdos_renyi";
    if (gen == "erdos_renyi") {
      ErdosRenyiSource er;
      maybe(g, "nodes", "graph", er.nodes);
      maybe(g, "edge_probability", "graph", er.edge_probability);
      if (g["seed"]) {
        er.seed = get<std::uint64_t>(g["seed"], "graph.seed");
      }
      run.topology = er;
    } else if (gen == "edge_list") {
      if (!g["edge_list"]) {
        throw ConfigError("graph.edge_list is required for the edge_list generator");
      }
      std::filesystem::path p = get<std::string>(g["edge_list"], "graph.edge_list");
      if (p.is_relative()) {
        p = std::filesystem::path(base_dir) / p;
      }
      run.topology = EdgeListSource{p.string()};
    } else {
      throw ConfigError(fmt::format("unknown graph generator '{}'", gen));
    }
  }

  if (const auto w = root["weights"]) {
    allow_keys(w, "weights", {"scheme", "gamma"});
    const auto scheme = w["scheme"] ? get<std::string>(w["scheme"], "weights.scheme") : "perron";
    if (scheme == "perron") {
      run.weight_scheme = WeightScheme::perron;
    } else if (scheme == "metropolis") {
      run.weight_scheme = WeightScheme::metropolis;
    } else {
      throw ConfigError(fmt::format("unknown weight scheme '{}'", scheme));
    }
    if (w["gamma"]) {
      run.gamma = get<double>(w["gamma"], "weights.gamma");
    }
  }

  if (const auto init = root["initial"]) {
    allow_keys(init, "initial", {"uniform", "values"});
    if (init["values"]) {
      run.initial = get<std::vector<double>>(init["values"], "initial.values");
    } else if (init["uniform"]) {
      const auto range = get<std::vector<double>>(init["uniform"], "initial.uniform");
      if (range.size() != 2) {
        throw ConfigError("initial.uniform must be [lo, hi]");
      }
      run.initial = UniformInitial{range[0], range[1]};
    }
  }

  if (const auto p = root["protocol"]) {
    allow_keys(p, "protocol", {"alpha", "rho", "delta", "link_reliability"});
    maybe(p, "alpha", "protocol", run.protocol.alpha);
    maybe(p, "rho", "protocol", run.protocol.rho);
    run.protocol.delta = 2.0 * run.protocol.alpha;
    maybe(p, "delta", "protocol", run.protocol.delta);
    maybe(p, "link_reliability", "protocol", run.link_reliability);
  }

  if (const auto m = root["msr"]) {
    allow_keys(m, "msr", {"trim"});
    maybe(m, "trim", "msr", run.msr.trim);
  }

  if (const auto c = root["convergence"]) {
    allow_keys(c, "convergence", {"tolerance", "window"});
    maybe(c, "tolerance", "convergence", run.convergence_tol);
    maybe(c, "window", "convergence", run.convergence_window);
  }

  if (const auto adv = root["adversaries"]) {
    if (!adv.IsSequence()) {
      throw ConfigError("'adversaries' must be a list");
    }
    for (const auto& a : adv) {
      run.adversaries.push_back(parse_adversary(a));
    }
  }

  if (const auto a = root["analysis"]) {
    allow_keys(a, "analysis", {"wasserstein", "bounds", "cdf_grid"});
    maybe(a, "wasserstein", "analysis", cfg.analysis.wasserstein);
    maybe(a, "bounds", "analysis", cfg.analysis.bounds);
    maybe(a, "cdf_grid", "analysis", cfg.analysis.cdf_grid);
  }

  if (const auto o = root["output"]) {
    allow_keys(o, "output", {"dir", "trace"});
    maybe(o, "dir", "output", cfg.output_dir);
    maybe(o, "trace", "output", run.record_trace);
  }
  return cfg;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("YAML parse error: {}", e.what()));
  }
  return from_yaml(root, base_dir);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot read config '{}'", path));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(buffer.str(), dir.empty() ? "." : dir.string());
}

}  // namespace rescon
