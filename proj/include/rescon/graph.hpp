#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rescon {

using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;

/// Undirected simple graph on nodes [0, n). Edges are stored with i < j,
/// sorted and deduplicated; adjacency lists are sorted ascending.
class Topology {
 public:
  Topology() = default;

  /// Throws std::invalid_argument on self-loops or out-of-range endpoints.
  /// Duplicates and (j, i) orientations are normalised.
  Topology(std::size_t n, std::vector<Edge> edges);

  std::size_t size() const { return adjacency_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const NodeId> neighbors(NodeId i) const { return adjacency_.at(i); }
  std::size_t degree(NodeId i) const { return adjacency_.at(i).size(); }
  std::size_t max_degree() const;
  bool has_edge(NodeId i, NodeId j) const;

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeId>> adjacency_;
};

/// Each unordered pair is kept independently with probability `p_edge`.
/// Pairs are visited in lexicographic order, one uniform draw per pair.
Topology generate_erdos_renyi(std::size_t n, double p_edge, std::uint64_t seed);

/// True iff a traversal from node 0 reaches every node.
bool is_connected(const Topology& t);

/// Connectivity of the subgraph induced by the nodes with keep[i] == true.
/// An empty selection counts as connected.
bool is_connected(const Topology& t, const std::vector<bool>& keep);

enum class WeightScheme { perron, metropolis };

const char* to_string(WeightScheme scheme);

/// Dense n x n consensus weight matrix. Immutable; removing a node yields a
/// new matrix.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(std::size_t n, std::vector<double> entries, WeightScheme scheme);

  std::size_t size() const { return n_; }
  double operator()(NodeId i, NodeId j) const { return w_[i * n_ + j]; }
  WeightScheme scheme() const { return scheme_; }

  double row_sum(NodeId i) const;
  double col_sum(NodeId j) const;
  bool is_doubly_stochastic(double tol = 1e-12) const;

  /// Cuts node `i` off: for every j != i the weight w_ji moves onto w_jj and
  /// w_ij, w_ji become zero; row i becomes the unit row. The result stays
  /// doubly stochastic.
  WeightMatrix without_node(NodeId i) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> w_;
  WeightScheme scheme_ = WeightScheme::perron;
};

/// W = I - gamma L. Requires 0 < gamma < 1 / d_max (strict).
WeightMatrix perron_weights(const Topology& t, double gamma);

/// w_ij = 1 / (1 + max(d_i, d_j)) on edges, residual on the diagonal.
WeightMatrix metropolis_weights(const Topology& t);

/// 0.9 / d_max, or 0.5 on an edgeless graph.
double default_gamma(const Topology& t);

/// Edge-list text format: first line `n`, then one `i j` pair per line.
/// Blank lines and lines starting with '#' are ignored.
Topology read_edge_list(std::istream& in);
Topology read_edge_list_file(const std::string& path);
void write_edge_list(std::ostream& out, const Topology& t);

}  // namespace rescon
