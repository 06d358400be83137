#pragma once

// Internal search helpers shared by the graph, unicast and multicast code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <span>
#include <tuple>
#include <vector>

#include "netlab/graph.hpp"

namespace netlab::detail {

struct SearchResult {
  std::vector<double> dist;
  std::vector<NodeId> parent;  // kNoNode for sources and unreached nodes
};

struct AllowAll {
  bool operator()(NodeId) const { return true; }
  bool operator()(NodeId, NodeId) const { return true; }
};

/**
 * Multi-source Dijkstra. Pops in (distance, node id) order; on equal
 * tentative distance the lower-numbered parent wins.
 */
template <class NodeOk = AllowAll, class EdgeOk = AllowAll>
SearchResult dijkstra(const NetworkGraph& graph, std::span<const NodeId> sources, Metric metric,
                      NodeOk node_ok = {}, EdgeOk edge_ok = {}) {
  const int n = graph.node_count();
  SearchResult out{std::vector<double>(n, kInfinity), std::vector<NodeId>(n, kNoNode)};
  std::vector<bool> done(n, false);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (NodeId s : sources) {
    if (!node_ok(s)) continue;
    out.dist[s] = 0.0;
    heap.emplace(0.0, s);
  }
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (done[u] || d > out.dist[u]) continue;
    done[u] = true;
    for (const Adjacent& adj : graph.neighbors(u)) {
      const NodeId v = adj.node;
      if (done[v] || !node_ok(v) || !edge_ok(u, v)) continue;
      const double nd = d + weight(adj.attrs, metric);
      if (nd < out.dist[v] || (nd == out.dist[v] && out.parent[v] != kNoNode && u < out.parent[v])) {
        const bool improved = nd < out.dist[v];
        out.dist[v] = nd;
        out.parent[v] = u;
        if (improved) heap.emplace(nd, v);
      }
    }
  }
  return out;
}

/// Node sequence from the search origin to `target`; empty when unreached.
inline std::vector<NodeId> extract_path(const SearchResult& result, NodeId target) {
  std::vector<NodeId> path;
  if (result.dist[target] == kInfinity) return path;
  for (NodeId v = target; v != kNoNode; v = result.parent[v]) path.push_back(v);
  return {path.rbegin(), path.rend()};
}

/**
 * Lexicographically smallest among the shortest src -> dst paths that respect
 * the filters. Path sums are matched with kSumTolerance.
 */
template <class NodeOk = AllowAll, class EdgeOk = AllowAll>
std::vector<NodeId> lexicographic_shortest(const NetworkGraph& graph, NodeId src, NodeId dst,
                                           Metric metric, NodeOk node_ok = {},
                                           EdgeOk edge_ok = {}) {
  const NodeId targets[] = {dst};
  const SearchResult to_dst = dijkstra(graph, targets, metric, node_ok, edge_ok);
  if (!node_ok(src) || to_dst.dist[src] == kInfinity) return {};
  std::vector<NodeId> path{src};
  std::vector<bool> used(graph.node_count(), false);
  used[src] = true;
  for (NodeId u = src; u != dst;) {
    NodeId next = kNoNode;
    for (const Adjacent& adj : graph.neighbors(u)) {
      const NodeId v = adj.node;
      if (used[v] || !node_ok(v) || !edge_ok(u, v) || to_dst.dist[v] == kInfinity) continue;
      const double via = weight(adj.attrs, metric) + to_dst.dist[v];
      if (std::abs(via - to_dst.dist[u]) <= kSumTolerance * std::max(1.0, to_dst.dist[u])) {
        next = v;
        break;
      }
    }
    if (next == kNoNode) {
      // Zero-weight plateaus can strand the greedy walk; fall back to the tree path.
      const NodeId sources[] = {src};
      return extract_path(dijkstra(graph, sources, metric, node_ok, edge_ok), dst);
    }
    used[next] = true;
    path.push_back(next);
    u = next;
  }
  return path;
}

/// Yen's algorithm restricted to nodes accepted by `node_ok`.
std::vector<PathRecord> k_shortest(const NetworkGraph& graph, NodeId src, NodeId dst, int k,
                                   Metric metric, const std::function<bool(NodeId)>& node_ok);

/// Minimum spanning tree over the subgraph induced by `nodes` (must be connected).
std::set<EdgeKey> prim_induced(const NetworkGraph& graph, const std::set<NodeId>& nodes);

}  // namespace netlab::detail
