#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "netlab/broadcast.hpp"
#include "netlab/graph.hpp"
#include "netlab/multicast.hpp"
#include "netlab/rate_alloc.hpp"
#include "netlab/sim.hpp"

namespace netlab::cli {

// All loaders throw netlab::ParseError carrying the file and 1-based line.
// A `graph:` field is either a path (relative to the referencing file) to a
// graph text file, or an inline map {nodes: N, edges: [[u, v, cost, delay, capacity], ...]}.

/// Scenario for `sim` and `bcast`:
///   graph, protocol, source, seed, params {key: number},
///   kernel {fixed_link_delay: number|link, horizon, warmup},
///   events [{time, kind, u, v, cost, delay, capacity}]
struct ScenarioFile {
  std::string name;  // file stem
  sim::ScenarioScript script;
  std::optional<NodeId> source;
};
ScenarioFile load_scenario(const std::filesystem::path& path);

/// Multicast request:
///   graph, source, destinations [..], algorithm kmb|bsma|sph|min-delay,
///   mode utilization|congestion, bounds {dest: delay}, degree_limit,
///   policy {kind: greedy|aries, threshold}, events [{join: n} | {leave: n}]
struct RequestFile {
  std::string name;
  NetworkGraph graph;
  multicast::MulticastRequest request;
  std::string algorithm = "bsma";
  multicast::Policy policy;
  std::vector<multicast::MembershipChange> events;
};
RequestFile load_request(const std::filesystem::path& path);

/// Rate configuration:
///   links [capacity..], connections [{route: [..], demand}],
///   round_trip, cell_rate, horizon, tolerance,
///   events [{time, demand|capacity: {index, value}}]
struct RatesFile {
  std::string name;
  rates::RateNetwork network;
  rates::RateSimConfig config;
  std::vector<rates::RateEvent> events;
};
RatesFile load_rates(const std::filesystem::path& path);

}  // namespace netlab::cli
