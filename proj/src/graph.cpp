#include "rescon/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "rescon/rng.hpp"

namespace rescon {

Topology::Topology(std::size_t n, std::vector<Edge> edges) : adjacency_(n) {
  for (auto& [a, b] : edges) {
    if (a >= n || b >= n) {
      throw std::invalid_argument(fmt::format("edge ({}, {}) outside [0, {})", a, b, n));
    }
    if (a == b) {
      throw std::invalid_argument(fmt::format("self-loop on node {}", a));
    }
    if (a > b) {
      std::swap(a, b);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);
  for (const auto& [a, b] : edges_) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& list : adjacency_) {
    std::sort(list.begin(), list.end());
  }
}

std::size_t Topology::max_degree() const {
  std::size_t d = 0;
  for (const auto& list : adjacency_) {
    d = std::max(d, list.size());
  }
  return d;
}

bool Topology::has_edge(NodeId i, NodeId j) const {
  if (i >= size() || j >= size()) {
    return false;
  }
  const auto& list = adjacency_[i];
  return std::binary_search(list.begin(), list.end(), j);
}

Topology generate_erdos_renyi(std::size_t n, double p_edge, std::uint64_t seed) {
  if (n < 2) {
    throw std::invalid_argument("Erdos-Renyi graph needs at least two nodes");
  }
  if (!(p_edge >= 0.0 && p_edge <= 1.0)) {
    throw std::invalid_argument("edge probability must lie in [0, 1]");
  }
  RandomStream rng({.master_seed = seed, .purpose = "topology"});
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      if (rng.uniform() < p_edge) {
        edges.emplace_back(i, j);
      }
    }
  }
  return Topology(n, std::move(edges));
}

bool is_connected(const Topology& t, const std::vector<bool>& keep) {
  const std::size_t n = t.size();
  NodeId start = n;
  std::size_t wanted = 0;
  for (NodeId i = 0; i < n; ++i) {
    if (keep[i]) {
      ++wanted;
      if (start == n) {
        start = i;
      }
    }
  }
  if (wanted == 0) {
    return true;
  }
  std::vector<bool> seen(n, false);
  std::vector<NodeId> stack{start};
  seen[start] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : t.neighbors(u)) {
      if (keep[v] && !seen[v]) {
        seen[v] = true;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  return reached == wanted;
}

bool is_connected(const Topology& t) {
  if (t.size() == 0) {
    return true;
  }
  return is_connected(t, std::vector<bool>(t.size(), true));
}

const char* to_string(WeightScheme scheme) {
  switch (scheme) {
    case WeightScheme::perron:
      return "perron";
    case WeightScheme::metropolis:
      return "metropolis";
  }
  return "unknown";
}

WeightMatrix::WeightMatrix(std::size_t n, std::vector<double> entries, WeightScheme scheme)
    : n_(n), w_(std::move(entries)), scheme_(scheme) {
  if (w_.size() != n * n) {
    throw std::invalid_argument("weight matrix entry count does not match n*n");
  }
}

double WeightMatrix::row_sum(NodeId i) const {
  double s = 0.0;
  for (NodeId j = 0; j < n_; ++j) {
    s += (*this)(i, j);
  }
  return s;
}

double WeightMatrix::col_sum(NodeId j) const {
  double s = 0.0;
  for (NodeId i = 0; i < n_; ++i) {
    s += (*this)(i, j);
  }
  return s;
}

bool WeightMatrix::is_doubly_stochastic(double tol) const {
  for (NodeId i = 0; i < n_; ++i) {
    if (std::abs(row_sum(i) - 1.0) > tol || std::abs(col_sum(i) - 1.0) > tol) {
      return false;
    }
  }
  return std::all_of(w_.begin(), w_.end(), [](double v) { return v >= 0.0; });
}

WeightMatrix WeightMatrix::without_node(NodeId i) const {
  std::vector<double> w = w_;
  for (NodeId j = 0; j < n_; ++j) {
    if (j == i) {
      continue;
    }
    w[j * n_ + j] += w[j * n_ + i];
    w[j * n_ + i] = 0.0;
    w[i * n_ + j] = 0.0;
  }
  w[i * n_ + i] = 1.0;
  return WeightMatrix(n_, std::move(w), scheme_);
}

WeightMatrix perron_weights(const Topology& t, double gamma) {
  const std::size_t n = t.size();
  const std::size_t dmax = t.max_degree();
  const bool in_range = gamma > 0.0 && (dmax == 0 || gamma < 1.0 / static_cast<double>(dmax));
  if (!in_range) {
    throw std::invalid_argument(
        fmt::format("Perron step {} outside (0, 1/d_max) with d_max = {}", gamma, dmax));
  }
  std::vector<double> w(n * n, 0.0);
  for (NodeId i = 0; i < n; ++i) {
    w[i * n + i] = 1.0 - gamma * static_cast<double>(t.degree(i));
    for (NodeId j : t.neighbors(i)) {
      w[i * n + j] = gamma;
    }
  }
  return WeightMatrix(n, std::move(w), WeightScheme::perron);
}

WeightMatrix metropolis_weights(const Topology& t) {
  const std::size_t n = t.size();
  std::vector<double> w(n * n, 0.0);
  for (NodeId i = 0; i < n; ++i) {
    double off = 0.0;
    for (NodeId j : t.neighbors(i)) {
      const double wij = 1.0 / (1.0 + static_cast<double>(std::max(t.degree(i), t.degree(j))));
      w[i * n + j] = wij;
      off += wij;
    }
    w[i * n + i] = 1.0 - off;
  }
  return WeightMatrix(n, std::move(w), WeightScheme::metropolis);
}

double default_gamma(const Topology& t) {
  const std::size_t dmax = t.max_degree();
  return dmax == 0 ? 0.5 : 0.9 / static_cast<double>(dmax);
}

Topology read_edge_list(std::istream& in) {
  std::string line;
  std::size_t n = 0;
  bool have_n = false;
  std::vector<Edge> edges;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') {
      continue;
    }
    std::istringstream fields(line);
    if (!have_n) {
      if (!(fields >> n)) {
        throw std::invalid_argument(fmt::format("edge list line {}: expected node count", line_no));
      }
      have_n = true;
      continue;
    }
    long long a = -1;
    long long b = -1;
    if (!(fields >> a >> b) || a < 0 || b < 0) {
      throw std::invalid_argument(fmt::format("edge list line {}: expected `i j`", line_no));
    }
    edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
  }
  if (!have_n) {
    throw std::invalid_argument("edge list is empty");
  }
  return Topology(n, std::move(edges));
}

Topology read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(fmt::format("cannot open edge list '{}'", path));
  }
  return read_edge_list(in);
}

void write_edge_list(std::ostream& out, const Topology& t) {
  out << t.size() << '\n';
  for (const auto& [a, b] : t.edges()) {
    out << a << ' ' << b << '\n';
  }
}

}  // namespace rescon
