#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "netlab/graph.hpp"
#include "netlab/sim.hpp"

namespace netlab::multipath {

struct DelayBoundInputs {
  double delta = 0.0;                // longest propagation delay to a qualifying neighbour
  double queue_backlog_delay = 0.0;  // backlog x per-packet transmission time
  double mad = 0.0;
};

/// Exclusive upper bound on the delay from a node to the destination:
/// delta * (1 + Q) + MAD. Throws std::invalid_argument on negative or
/// non-finite inputs.
double compute_delay_bound(const DelayBoundInputs& inputs);

struct NextHop {
  NodeId neighbor = kNoNode;
  double link_delay = 0.0;
  double path_delay = 0.0;  // link delay + transmission time + neighbour's worst path delay

  friend bool operator==(const NextHop&, const NextHop&) = default;
};

struct MultipathEntry {
  NodeId destination = kNoNode;
  std::vector<NextHop> next_hops;  // sorted by neighbour id
  std::optional<double> mad;       // empty when the destination is unreachable

  double delta() const;
  double worst_path_delay() const;
  friend bool operator==(const MultipathEntry&, const MultipathEntry&) = default;
};

struct MultipathConfig {
  double beta = 2.0;            // MAD = beta x shortest path delay
  double transmission_time = 1.0;
  int credits_per_destination = 4;
};

/**
 * Rebuilds the entry for (self, destination). `distance[v]` is node v's
 * routing distance to the destination in the delay metric (each hop costing
 * link delay plus transmission time) and `worst[v]` the longest path delay
 * over v's own multipath set. A neighbour qualifies when it is strictly
 * closer than self and the longest path through it is at most MAD, so the
 * whole multipath stays within MAD.
 */
MultipathEntry update_mad(const NetworkGraph& live, NodeId self, NodeId destination,
                          const std::vector<double>& distance, const std::vector<double>& worst,
                          const MultipathConfig& config);

/// Entries of every node for one destination, built in order of increasing distance.
std::vector<MultipathEntry> multipath_entries(const NetworkGraph& live, NodeId destination,
                                              const std::vector<double>& distance,
                                              const MultipathConfig& config);

struct CreditState {
  NodeId destination = kNoNode;
  int total = 0;
  int available = 0;
};

enum class Admission { Accepted, Rejected };

/// Takes one credit when the destination has a next hop and a credit is free.
Admission admit(const MultipathEntry& entry, CreditState& credits);

struct ForwardDecision {
  enum class Kind { Send, Wait, Drop } kind = Kind::Drop;
  NodeId next_hop = kNoNode;
};

/**
 * Least-queued qualifying neighbour, ties to the lowest id. `backlog(k)`
 * gives neighbour k's queue for the destination, or nullopt when k has no
 * free credit. Wait means every next hop is full; Drop means none is left.
 */
ForwardDecision forward(const MultipathEntry& entry,
                        const std::function<std::optional<int>(NodeId)>& backlog);

// ---------------------------------------------------------------------------
// Packet-level simulation

struct Flow {
  NodeId source = kNoNode;
  NodeId destination = kNoNode;
  double start = 0.0;
  double rate = 1.0;  // packets per time unit
  int count = 0;

  friend bool operator==(const Flow&, const Flow&) = default;
};

struct TrafficScenario {
  NetworkGraph graph;
  std::vector<Flow> flows;
  std::vector<sim::TopologyEvent> events;  // absolute times; routing reconverges instantly
  MultipathConfig config;
};

struct TrafficResult {
  sim::MetricsLog metrics;  // packet counters and latencies
  std::uint64_t unknown_destination = 0;
  std::uint64_t bound_checks = 0;        // (packet, hop) pairs checked on delivery
  std::uint64_t bound_violations = 0;
  std::uint64_t forwarding_loops = 0;    // packets that revisited a node
  bool credits_restored = false;         // available == total everywhere at the end
  double max_bound_slack_used = 0.0;     // max over checks of measured / bound
};

TrafficResult simulate_traffic(const TrafficScenario& scenario);

/// Random flows over a connected Waxman graph, optionally with one link
/// failure in the middle of the traffic. Rates are scaled down so that no
/// link carries more than `max_link_utilization` of its transmission
/// capacity when every flow follows its shortest-delay path.
TrafficScenario random_traffic(const WaxmanParams& params, int flow_count, bool with_failure,
                               double max_link_utilization = 0.8);

}  // namespace netlab::multipath
