#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "netlab/graph.hpp"
#include "netlab/sim.hpp"

namespace netlab::unicast {

/// Per-destination routing state as seen by the loop checker.
struct RouteEntry {
  NodeId destination = kNoNode;
  double distance = kInfinity;
  NodeId successor = kNoNode;
  NodeId predecessor = kNoNode;
  double feasible_distance = kInfinity;

  friend bool operator==(const RouteEntry&, const RouteEntry&) = default;
};

/// Routing tables of every node: snapshot[node][destination].
using RoutingSnapshot = std::vector<std::vector<RouteEntry>>;

struct LoopCheck {
  bool acyclic = true;
  std::vector<NodeId> cycle;  // starts at its smallest node id
};

LoopCheck check_loop_freedom(const RoutingSnapshot& snapshot, NodeId destination);

// ---------------------------------------------------------------------------
// Distributed Bellman-Ford

struct DbfMessage {
  std::vector<std::pair<NodeId, double>> entries;  // (destination, distance)
};

class DbfNode {
 public:
  using Message = DbfMessage;
  using Context = sim::Context<Message>;

  DbfNode(NodeId self, int node_count, double infinity_cap = 100.0);

  static sim::MessageClass classify(const Message& m) { return {"update", m.entries.size()}; }

  void on_start(Context& ctx);
  void on_message(Context& ctx, NodeId from, const Message& m);
  void on_link_up(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs);
  void on_link_down(Context& ctx, NodeId neighbor);
  void on_link_change(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs);

  std::vector<RouteEntry> table() const;

 private:
  void recompute(Context& ctx, std::optional<NodeId> full_table_to = std::nullopt);

  NodeId self_;
  int n_;
  double cap_;
  std::vector<double> dist_;
  std::vector<NodeId> succ_;
  std::vector<double> advertised_;
  std::map<NodeId, double> link_cost_;
  std::map<NodeId, std::vector<double>> reported_;
};

// ---------------------------------------------------------------------------
// Link-state records shared by ILS and LVA

struct LinkStateRecord {
  NodeId head = kNoNode;
  NodeId tail = kNoNode;
  double cost = kInfinity;  // infinity marks deletion
  std::uint64_t seq = 0;    // stamped by the head

  friend bool operator==(const LinkStateRecord&, const LinkStateRecord&) = default;
};

using DirectedLink = std::pair<NodeId, NodeId>;  // (head, tail)

/// Shortest-path tree over directed link records (cost metric), using the
/// same lowest-parent tie-break as the graph algorithms.
struct DirectedSpt {
  std::vector<double> dist;
  std::vector<NodeId> parent;
};
DirectedSpt directed_spt(NodeId root, int node_count,
                         const std::map<NodeId, std::vector<std::pair<NodeId, double>>>& out_links);

std::vector<RouteEntry> routes_from_spt(NodeId self, const DirectedSpt& spt);

struct LinkStateMessage {
  std::vector<LinkStateRecord> records;
};

/// Ideal link-state: flooding of sequence-numbered link records.
class IlsNode {
 public:
  using Message = LinkStateMessage;
  using Context = sim::Context<Message>;

  IlsNode(NodeId self, int node_count);

  static sim::MessageClass classify(const Message& m) { return {"lsu", m.records.size()}; }

  void on_start(Context& ctx);
  void on_message(Context& ctx, NodeId from, const Message& m);
  void on_link_up(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs);
  void on_link_down(Context& ctx, NodeId neighbor);
  void on_link_change(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs);

  const std::map<DirectedLink, LinkStateRecord>& topology() const { return topology_; }
  std::vector<RouteEntry> table() const;

 private:
  LinkStateRecord originate(NodeId neighbor, double cost);
  void flood(Context& ctx, const std::vector<LinkStateRecord>& records, NodeId except);

  NodeId self_;
  int n_;
  std::uint64_t seq_ = 0;
  std::map<DirectedLink, LinkStateRecord> topology_;
};

/// Link-vector: each node reports only the links of its own source graph.
class LvaNode {
 public:
  using Message = LinkStateMessage;
  using Context = sim::Context<Message>;

  LvaNode(NodeId self, int node_count);

  static sim::MessageClass classify(const Message& m) { return {"lvu", m.records.size()}; }

  void on_start(Context& ctx);
  void on_message(Context& ctx, NodeId from, const Message& m);
  void on_link_up(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs);
  void on_link_down(Context& ctx, NodeId neighbor);
  void on_link_change(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs);

  /// Links currently in this node's preferred paths, as last reported.
  const std::map<DirectedLink, LinkStateRecord>& source_graph() const { return source_graph_; }
  std::vector<RouteEntry> table() const;

 private:
  void stamp_own(NodeId neighbor, double cost);
  void recompute(Context& ctx, std::optional<NodeId> new_neighbor = std::nullopt);
  std::vector<RouteEntry> compute_routes() const;

  NodeId self_;
  int n_;
  std::uint64_t seq_ = 0;
  std::map<NodeId, double> own_links_;
  // Highest-sequence record seen per link. Kept after a link drops out of the
  // topology table so that stale reports cannot resurrect it.
  std::map<DirectedLink, LinkStateRecord> freshest_;
  std::map<NodeId, std::map<DirectedLink, LinkStateRecord>> reported_;  // per-neighbour source graphs
  std::map<DirectedLink, LinkStateRecord> source_graph_;
  std::vector<RouteEntry> routes_;
};

// ---------------------------------------------------------------------------
// Loop-free path-finding

enum class LpaFlag : std::uint8_t { Update, Query, Reply };

/// One destination's worth of path information: a single predecessor id.
struct LpaEntry {
  NodeId origin = kNoNode;  // node that created the entry
  NodeId destination = kNoNode;
  double distance = kInfinity;
  NodeId predecessor = kNoNode;
  LpaFlag flag = LpaFlag::Update;
};

struct LpaMessage {
  std::vector<LpaEntry> entries;
};

struct LpaCounters {
  std::uint64_t query_cycles = 0;       // times this node went active
  std::uint64_t query_entries_originated = 0;
  std::uint64_t query_entries_sent = 0;
  std::uint64_t replies_sent = 0;
  std::uint64_t relayed_queries_received = 0;  // query entries whose origin is not the sender
};

class LpaNode {
 public:
  using Message = LpaMessage;
  using Context = sim::Context<Message>;

  LpaNode(NodeId self, int node_count);

  static sim::MessageClass classify(const Message& m);

  void on_start(Context& ctx);
  void on_message(Context& ctx, NodeId from, const Message& m);
  void on_link_up(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs);
  void on_link_down(Context& ctx, NodeId neighbor);
  void on_link_change(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs);

  std::vector<RouteEntry> table() const;
  bool active(NodeId destination) const { return dest_[destination].active; }
  const LpaCounters& counters() const { return counters_; }

 private:
  struct Reported {
    double distance = kInfinity;
    NodeId predecessor = kNoNode;
  };
  struct DestState {
    double distance = kInfinity;
    NodeId successor = kNoNode;
    NodeId predecessor = kNoNode;
    double feasible = kInfinity;
    bool active = false;
    std::set<NodeId> pending;
    double sent_distance = kInfinity;
    NodeId sent_predecessor = kNoNode;
  };
  struct Candidate {
    NodeId neighbor = kNoNode;
    double distance = kInfinity;
    double reported = kInfinity;
    NodeId predecessor = kNoNode;
  };

  std::optional<Candidate> best_candidate(NodeId dest) const;
  bool path_avoids_self(NodeId neighbor, NodeId dest) const;
  void evaluate(NodeId dest);
  void go_active(NodeId dest);
  void finish_query(NodeId dest);
  void queue(NodeId to, LpaEntry entry);
  void announce(NodeId dest);
  void flush(Context& ctx);

  NodeId self_;
  int n_;
  std::map<NodeId, double> link_cost_;
  std::map<NodeId, std::vector<Reported>> reported_;
  std::vector<DestState> dest_;
  std::map<NodeId, std::vector<LpaEntry>> outbox_;
  LpaCounters counters_;
};

// ---------------------------------------------------------------------------
// Scenario runner

enum class Protocol { Dbf, Ils, Lpa, Lva };

std::string_view to_string(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view text);

struct RunOptions {
  double dbf_infinity = 100.0;
  /// Check every destination for successor loops after every event.
  bool check_loops = false;
};

struct RunResult {
  sim::MetricsLog metrics;
  RoutingSnapshot routes;        // final tables
  NetworkGraph final_topology;   // operational links at the end
  std::uint64_t lpa_query_cycles = 0;
  std::uint64_t lpa_query_entries_forwarded = 0;  // query entries not originated by the sender
};

RunResult run(const sim::ScenarioScript& script, Protocol protocol, const RunOptions& options = {});

/// Topology changes used by the routing comparison suite.
enum class ChangeKind { LinkFailure, LinkAddition, CostChange, MultiCostChange };

std::string_view to_string(ChangeKind kind);
inline constexpr ChangeKind kAllChangeKinds[] = {ChangeKind::LinkFailure, ChangeKind::LinkAddition,
                                                 ChangeKind::CostChange, ChangeKind::MultiCostChange};

/**
 * Connected Waxman graph for `seed` plus one change injected right after
 * warm-up. Link additions join a random non-adjacent pair with the distance
 * weight; cost changes draw a new cost uniformly from [1, 10]; the multi
 * variant changes five distinct links at the same instant.
 */
sim::ScenarioScript suite_scenario(const WaxmanParams& params, ChangeKind kind);

/// Dijkstra distances from every node on `graph`, for comparing converged tables.
RoutingSnapshot oracle_routes(const NetworkGraph& graph);

}  // namespace netlab::unicast
