#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "netlab/graph.hpp"

namespace netlab::multicast {

enum class CostMode { Utilization, Congestion };

std::string_view to_string(CostMode mode);
std::optional<CostMode> parse_cost_mode(std::string_view text);

/// Thrown for unreachable terminals and infeasible delay bounds.
class MulticastError : public GraphError {
 public:
  MulticastError(const std::string& what, std::vector<NodeId> nodes)
      : GraphError(what), nodes_(std::move(nodes)) {}
  const std::vector<NodeId>& nodes() const { return nodes_; }

 private:
  std::vector<NodeId> nodes_;
};

struct MulticastRequest {
  NodeId source = kNoNode;
  std::set<NodeId> destinations;
  std::map<NodeId, double> delay_bounds;  // missing destinations are unbounded
  CostMode mode = CostMode::Utilization;
  std::optional<int> degree_limit;

  double bound(NodeId destination) const;
};

/// Utilization: sum of edge costs. Congestion: largest edge cost.
double tree_cost(const NetworkGraph& graph, const TreeRecord& tree, CostMode mode);

/// Tree terminals are the destinations plus the source.
TreeRecord kmb(const NetworkGraph& graph, NodeId source, const std::set<NodeId>& destinations);

// ---------------------------------------------------------------------------
// BSMA

struct BsmaOptions {
  int k = 8;                   // reconnection candidates examined per superedge
  int max_iterations = 10000;
};

struct BsmaStep {
  int iteration = 0;
  double cost = 0.0;           // objective of the request's mode
  double edge_cost_sum = 0.0;
  std::vector<NodeId> removed;  // superedge taken out (empty for the initial tree)
  std::vector<NodeId> added;    // replacement path
  int candidates_examined = 0;
  int capped_searches = 0;      // superedges whose k candidates held no acceptable path
  std::set<EdgeKey> edges;      // tree after this step
};

struct BsmaResult {
  TreeRecord tree;
  std::vector<BsmaStep> trace;  // trace[0] is the minimum-delay tree
  BsmaStep final_round;         // the search that found no improving reconnection
};

BsmaResult bsma(const NetworkGraph& graph, const MulticastRequest& request,
                const BsmaOptions& options = {});

/// Union of source-rooted minimum-delay paths to the destinations.
TreeRecord minimum_delay_tree(const NetworkGraph& graph, NodeId source,
                              const std::set<NodeId>& destinations);

// ---------------------------------------------------------------------------
// Shortest-path heuristic with a degree limit

struct SphResult {
  std::optional<TreeRecord> tree;  // empty when unsolved
  std::set<NodeId> unattached;     // destinations left out when unsolved
};

/// Grows from the source, attaching the nearest destination each round. No
/// node may exceed `degree_limit` tree edges. Throws std::invalid_argument
/// when the limit is below 2.
SphResult sph_degree_constrained(const NetworkGraph& graph, NodeId source,
                                 const std::set<NodeId>& destinations,
                                 std::optional<int> degree_limit);

// ---------------------------------------------------------------------------
// Dynamic membership

struct MembershipChange {
  enum class Kind { Join, Leave } kind = Kind::Join;
  NodeId node = kNoNode;

  friend bool operator==(const MembershipChange&, const MembershipChange&) = default;
};

struct Policy {
  enum class Kind { Greedy, Aries } kind = Kind::Greedy;
  std::optional<int> threshold;  // ARIES B; empty means never rearrange
};

struct DamageCounter {
  std::map<NodeId, int> counts;  // region id (smallest relay in the region) -> changes
};

struct SessionState {
  TreeRecord tree;  // terminals = source + members
  std::set<NodeId> members;
  DamageCounter damage;

  friend bool operator==(const SessionState& a, const SessionState& b) {
    return a.tree == b.tree && a.members == b.members && a.damage.counts == b.damage.counts;
  }
};

SessionState start_session(const NetworkGraph& graph, NodeId source);

struct UpdateOutcome {
  SessionState state;
  bool rearranged = false;   // a region reached its threshold and was rebuilt
  NodeId region = kNoNode;   // damaged region, if any
  std::size_t churn = 0;     // edges added plus edges removed
};

/**
 * GREEDY join attaches the node by its cheapest path to the tree; leave
 * prunes dangling relays. ARIES then charges the change to the relay region
 * next to it and, at the threshold, rebuilds that region with KMB over the
 * members bordering it, keeping the result only if it is cheaper.
 */
UpdateOutcome dynamic_update(const NetworkGraph& graph, const SessionState& state,
                             const MembershipChange& change, const Policy& policy);

std::size_t edge_churn(const std::set<EdgeKey>& before, const std::set<EdgeKey>& after);

// ---------------------------------------------------------------------------
// Random instances

struct MulticastInstance {
  NetworkGraph graph;
  NodeId source = kNoNode;
  std::set<NodeId> destinations;
};

/// Connected Waxman graph whose delays are the Waxman weights and whose costs
/// are drawn independently from {1..10}, with a random source and
/// `min_destinations`..`max_destinations` distinct other nodes.
MulticastInstance random_instance(const WaxmanParams& params, int min_destinations,
                                  int max_destinations);

/// Joins (probability 0.6 while non-members remain) and leaves of uniformly
/// chosen nodes other than the source; the first event is always a join.
std::vector<MembershipChange> random_membership_sequence(int node_count, NodeId source, int events,
                                                         std::uint64_t seed);

}  // namespace netlab::multicast
