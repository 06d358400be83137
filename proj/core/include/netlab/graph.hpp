#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace netlab {

using NodeId = int;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr NodeId kNoNode = -1;

// Tolerance used wherever two independently accumulated sums are compared.
inline constexpr double kSumTolerance = 1e-9;

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Metric { Cost, Delay };

struct EdgeAttrs {
  double cost = 1.0;
  double delay = 1.0;
  double capacity = 1.0;

  friend bool operator==(const EdgeAttrs&, const EdgeAttrs&) = default;
};

inline double weight(const EdgeAttrs& attrs, Metric metric) {
  return metric == Metric::Cost ? attrs.cost : attrs.delay;
}

/// Undirected edge with u < v.
struct Edge {
  NodeId u = kNoNode;
  NodeId v = kNoNode;
  EdgeAttrs attrs;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Adjacent {
  NodeId node = kNoNode;
  EdgeAttrs attrs;
};

/**
 * Undirected network over dense node ids 0..N-1. Every edge carries cost,
 * delay and capacity. Adjacency lists are kept sorted by neighbour id so
 * every traversal is deterministic.
 */
class NetworkGraph {
 public:
  NetworkGraph() = default;
  explicit NetworkGraph(int node_count);

  int node_count() const { return static_cast<int>(adjacency_.size()); }
  std::size_t edge_count() const { return edges_.size(); }
  bool has_node(NodeId n) const { return n >= 0 && n < node_count(); }

  /// Throws GraphError on self-loops, duplicates, unknown nodes or bad attributes.
  void add_edge(NodeId u, NodeId v, EdgeAttrs attrs);
  void remove_edge(NodeId u, NodeId v);
  void set_attrs(NodeId u, NodeId v, EdgeAttrs attrs);

  bool has_edge(NodeId u, NodeId v) const;
  std::optional<EdgeAttrs> edge(NodeId u, NodeId v) const;
  const EdgeAttrs& attrs(NodeId u, NodeId v) const;  // throws if absent

  std::span<const Adjacent> neighbors(NodeId n) const;
  int degree(NodeId n) const { return static_cast<int>(neighbors(n).size()); }

  /// All edges ordered by (u, v).
  std::vector<Edge> edges() const;

  bool connected() const;
  /// Component label per node; labels are the smallest node id in the component.
  std::vector<NodeId> components() const;

  friend bool operator==(const NetworkGraph& a, const NetworkGraph& b) {
    return a.adjacency_.size() == b.adjacency_.size() && a.edges_ == b.edges_;
  }

 private:
  static void check_attrs(const EdgeAttrs& attrs);
  void require_node(NodeId n) const;

  std::vector<std::vector<Adjacent>> adjacency_;
  std::map<std::pair<NodeId, NodeId>, EdgeAttrs> edges_;
};

struct PathRecord {
  std::vector<NodeId> nodes;
  double cost = 0.0;
  double delay = 0.0;

  friend bool operator==(const PathRecord&, const PathRecord&) = default;
};

using EdgeKey = std::pair<NodeId, NodeId>;  // normalised, first < second

inline EdgeKey edge_key(NodeId a, NodeId b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

/**
 * A tree embedded in a graph. `cost` is the sum of member edge costs and
 * `delay` maps each terminal to the delay of its root path.
 */
struct TreeRecord {
  NodeId root = kNoNode;
  std::set<NodeId> terminals;
  std::set<EdgeKey> edges;
  double cost = 0.0;
  std::map<NodeId, double> delay;

  std::set<NodeId> nodes() const;
  std::map<NodeId, int> degrees() const;
  int max_degree() const;

  friend bool operator==(const TreeRecord&, const TreeRecord&) = default;
};

/**
 * Builds a TreeRecord from an edge set, computing cost and terminal delays.
 * Throws GraphError if the edges do not form a tree containing root and all
 * terminals, or reference edges missing from the graph.
 */
TreeRecord make_tree(const NetworkGraph& graph, NodeId root, std::set<NodeId> terminals,
                     std::set<EdgeKey> edges);

/// Returns a description of the first violated tree invariant, if any.
std::optional<std::string> validate_tree(const NetworkGraph& graph, const TreeRecord& tree);

/// Removes non-terminal leaves (never the root) until none remain.
std::set<EdgeKey> prune_leaves(std::set<EdgeKey> edges, NodeId root,
                               const std::set<NodeId>& keep);

double path_weight(const NetworkGraph& graph, std::span<const NodeId> nodes, Metric metric);
PathRecord make_path(const NetworkGraph& graph, std::vector<NodeId> nodes);

struct ShortestPathTree {
  TreeRecord tree;
  std::map<NodeId, double> distance;  // reachable nodes only
  std::map<NodeId, NodeId> parent;    // reachable non-root nodes
};

ShortestPathTree shortest_path_tree(const NetworkGraph& graph, NodeId root, Metric metric);

TreeRecord prim_mst(const NetworkGraph& graph);

std::vector<PathRecord> k_shortest_loopless_paths(const NetworkGraph& graph, NodeId src,
                                                  NodeId dst, int k, Metric metric);

inline constexpr int kSteinerOracleNodeLimit = 12;

TreeRecord steiner_optimal(const NetworkGraph& graph, const std::set<NodeId>& terminals);

struct WaxmanParams {
  int n = 1;
  double alpha = 0.4;
  double beta = 0.14;
  std::uint64_t seed = 1;
  double capacity = 10.0;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Node placement used by the Waxman generators for a given (n, seed).
std::vector<Point> waxman_positions(int n, std::uint64_t seed);

/// Cost and delay assigned to an edge spanning Euclidean distance `d`.
double waxman_edge_weight(double d);

NetworkGraph waxman_random(const WaxmanParams& params);

/// Waxman draw plus deterministic augmentation: each further component is
/// joined to the component of node 0 by its shortest Euclidean pair.
NetworkGraph waxman_connected(const WaxmanParams& params);

}  // namespace netlab
