#include "netlab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <tuple>

#include <fmt/format.h>

#include "search.hpp"

namespace netlab {

NetworkGraph::NetworkGraph(int node_count) {
  if (node_count < 0) throw GraphError("negative node count");
  adjacency_.resize(node_count);
}

void NetworkGraph::require_node(NodeId n) const {
  if (!has_node(n)) throw GraphError(fmt::format("node not found: {}", n));
}

void NetworkGraph::check_attrs(const EdgeAttrs& a) {
  const auto bad = [](double x) { return !std::isfinite(x) || x < 0.0; };
  if (bad(a.cost) || bad(a.delay) || bad(a.capacity) || a.capacity <= 0.0)
    throw GraphError("edge attributes must be finite, nonnegative, capacity positive");
}

void NetworkGraph::add_edge(NodeId u, NodeId v, EdgeAttrs attrs) {
  require_node(u);
  require_node(v);
  if (u == v) throw GraphError(fmt::format("self-loop at node {}", u));
  check_attrs(attrs);
  const EdgeKey key = edge_key(u, v);
  if (!edges_.emplace(key, attrs).second)
    throw GraphError(fmt::format("duplicate edge {}-{}", key.first, key.second));
  const auto insert = [&](NodeId from, NodeId to) {
    auto& list = adjacency_[from];
    auto it = std::lower_bound(list.begin(), list.end(), to,
                               [](const Adjacent& a, NodeId id) { return a.node < id; });
    list.insert(it, Adjacent{to, attrs});
  };
  insert(u, v);
  insert(v, u);
}

void NetworkGraph::remove_edge(NodeId u, NodeId v) {
  if (edges_.erase(edge_key(u, v)) == 0)
    throw GraphError(fmt::format("edge not found: {}-{}", u, v));
  std::erase_if(adjacency_[u], [v](const Adjacent& a) { return a.node == v; });
  std::erase_if(adjacency_[v], [u](const Adjacent& a) { return a.node == u; });
}

void NetworkGraph::set_attrs(NodeId u, NodeId v, EdgeAttrs attrs) {
  check_attrs(attrs);
  auto it = edges_.find(edge_key(u, v));
  if (it == edges_.end()) throw GraphError(fmt::format("edge not found: {}-{}", u, v));
  it->second = attrs;
  for (auto& a : adjacency_[u])
    if (a.node == v) a.attrs = attrs;
  for (auto& a : adjacency_[v])
    if (a.node == u) a.attrs = attrs;
}

bool NetworkGraph::has_edge(NodeId u, NodeId v) const { return edges_.contains(edge_key(u, v)); }

std::optional<EdgeAttrs> NetworkGraph::edge(NodeId u, NodeId v) const {
  auto it = edges_.find(edge_key(u, v));
  if (it == edges_.end()) return std::nullopt;
  return it->second;
}

const EdgeAttrs& NetworkGraph::attrs(NodeId u, NodeId v) const {
  auto it = edges_.find(edge_key(u, v));
  if (it == edges_.end()) throw GraphError(fmt::format("edge not found: {}-{}", u, v));
  return it->second;
}

std::span<const Adjacent> NetworkGraph::neighbors(NodeId n) const {
  require_node(n);
  return adjacency_[n];
}

std::vector<Edge> NetworkGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edges_.size());
  for (const auto& [key, attrs] : edges_) out.push_back(Edge{key.first, key.second, attrs});
  return out;
}

std::vector<NodeId> NetworkGraph::components() const {
  std::vector<NodeId> label(node_count(), kNoNode);
  for (NodeId start = 0; start < node_count(); ++start) {
    if (label[start] != kNoNode) continue;
    std::deque<NodeId> queue{start};
    label[start] = start;
    while (!queue.empty()) {
      NodeId u = queue.front();
      queue.pop_front();
      for (const auto& a : adjacency_[u]) {
        if (label[a.node] == kNoNode) {
          label[a.node] = start;
          queue.push_back(a.node);
        }
      }
    }
  }
  return label;
}

bool NetworkGraph::connected() const {
  const auto label = components();
  return std::all_of(label.begin(), label.end(), [](NodeId l) { return l == 0; });
}

// ---------------------------------------------------------------------------
// Trees and paths

std::set<NodeId> TreeRecord::nodes() const {
  std::set<NodeId> out;
  if (root != kNoNode) out.insert(root);
  for (const auto& [a, b] : edges) {
    out.insert(a);
    out.insert(b);
  }
  return out;
}

std::map<NodeId, int> TreeRecord::degrees() const {
  std::map<NodeId, int> deg;
  for (NodeId n : nodes()) deg[n] = 0;
  for (const auto& [a, b] : edges) {
    ++deg[a];
    ++deg[b];
  }
  return deg;
}

int TreeRecord::max_degree() const {
  int best = 0;
  for (const auto& [n, d] : degrees()) best = std::max(best, d);
  return best;
}

namespace {

using AdjMap = std::map<NodeId, std::vector<NodeId>>;

AdjMap adjacency_of(const std::set<EdgeKey>& edges) {
  AdjMap adj;
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  return adj;
}

}  // namespace

std::optional<std::string> validate_tree(const NetworkGraph& graph, const TreeRecord& tree) {
  if (!graph.has_node(tree.root)) return "root not in graph";
  for (const auto& [a, b] : tree.edges)
    if (!graph.has_edge(a, b)) return fmt::format("edge {}-{} not in graph", a, b);
  const auto nodes = tree.nodes();
  if (tree.edges.size() + 1 != nodes.size()) return "edge count is not node count - 1";
  const AdjMap adj = adjacency_of(tree.edges);
  std::map<NodeId, double> delay{{tree.root, 0.0}};
  std::deque<NodeId> queue{tree.root};
  while (!queue.empty()) {
    NodeId u = queue.front();
    queue.pop_front();
    auto it = adj.find(u);
    if (it == adj.end()) continue;
    for (NodeId v : it->second) {
      if (delay.contains(v)) continue;
      delay[v] = delay[u] + graph.attrs(u, v).delay;
      queue.push_back(v);
    }
  }
  if (delay.size() != nodes.size()) return "tree is not connected";
  double cost = 0.0;
  for (const auto& [a, b] : tree.edges) cost += graph.attrs(a, b).cost;
  if (std::abs(cost - tree.cost) > kSumTolerance * std::max(1.0, std::abs(cost)))
    return "cost does not match edge sum";
  for (NodeId t : tree.terminals) {
    if (!delay.contains(t)) return fmt::format("terminal {} not spanned", t);
    auto it = tree.delay.find(t);
    if (it == tree.delay.end()) return fmt::format("no delay recorded for terminal {}", t);
    if (std::abs(it->second - delay[t]) > kSumTolerance * std::max(1.0, delay[t]))
      return fmt::format("delay mismatch at terminal {}", t);
  }
  return std::nullopt;
}

TreeRecord make_tree(const NetworkGraph& graph, NodeId root, std::set<NodeId> terminals,
                     std::set<EdgeKey> edges) {
  TreeRecord tree;
  tree.root = root;
  tree.terminals = std::move(terminals);
  tree.edges = std::move(edges);
  if (!graph.has_node(root)) throw GraphError(fmt::format("node not found: {}", root));
  const AdjMap adj = adjacency_of(tree.edges);
  std::map<NodeId, double> delay{{root, 0.0}};
  std::deque<NodeId> queue{root};
  while (!queue.empty()) {
    NodeId u = queue.front();
    queue.pop_front();
    auto it = adj.find(u);
    if (it == adj.end()) continue;
    for (NodeId v : it->second) {
      if (delay.contains(v)) continue;
      delay[v] = delay[u] + graph.attrs(u, v).delay;
      queue.push_back(v);
    }
  }
  for (const auto& [a, b] : tree.edges) tree.cost += graph.attrs(a, b).cost;
  for (NodeId t : tree.terminals) {
    auto it = delay.find(t);
    if (it == delay.end()) throw GraphError(fmt::format("terminal {} not spanned by tree", t));
    tree.delay[t] = it->second;
  }
  if (auto err = validate_tree(graph, tree)) throw GraphError("invalid tree: " + *err);
  return tree;
}

std::set<EdgeKey> prune_leaves(std::set<EdgeKey> edges, NodeId root, const std::set<NodeId>& keep) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<NodeId, int> deg;
    for (const auto& [a, b] : edges) {
      ++deg[a];
      ++deg[b];
    }
    for (auto it = edges.begin(); it != edges.end();) {
      const auto [a, b] = *it;
      const auto removable = [&](NodeId n) { return deg[n] == 1 && n != root && !keep.contains(n); };
      if (removable(a) || removable(b)) {
        it = edges.erase(it);
        changed = true;
        --deg[a];
        --deg[b];
      } else {
        ++it;
      }
    }
  }
  return edges;
}

double path_weight(const NetworkGraph& graph, std::span<const NodeId> nodes, Metric metric) {
  double total = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i)
    total += weight(graph.attrs(nodes[i - 1], nodes[i]), metric);
  return total;
}

PathRecord make_path(const NetworkGraph& graph, std::vector<NodeId> nodes) {
  PathRecord p;
  p.cost = path_weight(graph, nodes, Metric::Cost);
  p.delay = path_weight(graph, nodes, Metric::Delay);
  p.nodes = std::move(nodes);
  return p;
}

// ---------------------------------------------------------------------------
// Classical algorithms

ShortestPathTree shortest_path_tree(const NetworkGraph& graph, NodeId root, Metric metric) {
  if (!graph.has_node(root)) throw GraphError("node not found");
  const NodeId sources[] = {root};
  const auto search = detail::dijkstra(graph, sources, metric);
  ShortestPathTree out;
  std::set<EdgeKey> edges;
  std::set<NodeId> reached;
  for (NodeId v = 0; v < graph.node_count(); ++v) {
    if (search.dist[v] == kInfinity) continue;
    reached.insert(v);
    out.distance[v] = search.dist[v];
    if (v != root) {
      out.parent[v] = search.parent[v];
      edges.insert(edge_key(v, search.parent[v]));
    }
  }
  out.tree = make_tree(graph, root, std::move(reached), std::move(edges));
  return out;
}

namespace detail {

std::set<EdgeKey> prim_induced(const NetworkGraph& graph, const std::set<NodeId>& nodes) {
  std::set<EdgeKey> tree;
  if (nodes.empty()) return tree;
  // (cost, lo, hi, far end): ties fall to the lowest endpoint pair.
  using Item = std::tuple<double, NodeId, NodeId, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  std::set<NodeId> in;
  const auto add = [&](NodeId u) {
    in.insert(u);
    for (const auto& a : graph.neighbors(u)) {
      if (!nodes.contains(a.node) || in.contains(a.node)) continue;
      const EdgeKey k = edge_key(u, a.node);
      heap.emplace(a.attrs.cost, k.first, k.second, a.node);
    }
  };
  add(*nodes.begin());
  while (!heap.empty() && in.size() < nodes.size()) {
    auto [c, lo, hi, far] = heap.top();
    heap.pop();
    if (in.contains(far)) continue;
    tree.insert({lo, hi});
    add(far);
  }
  if (in.size() != nodes.size()) throw GraphError("graph not connected");
  return tree;
}

std::vector<PathRecord> k_shortest(const NetworkGraph& graph, NodeId src, NodeId dst, int k,
                                   Metric metric, const std::function<bool(NodeId)>& node_ok) {
  std::vector<PathRecord> found;
  if (k < 1 || src == dst || !node_ok(src) || !node_ok(dst)) return found;
  const auto metric_of = [&](const PathRecord& p) { return metric == Metric::Cost ? p.cost : p.delay; };
  const auto less = [&](const PathRecord& a, const PathRecord& b) {
    return std::forward_as_tuple(metric_of(a), a.nodes) < std::forward_as_tuple(metric_of(b), b.nodes);
  };
  std::set<PathRecord, decltype(less)> candidates(less);
  std::set<std::vector<NodeId>> seen;

  {
    auto first = lexicographic_shortest(graph, src, dst, metric, node_ok);
    if (first.empty()) return found;
    seen.insert(first);
    found.push_back(make_path(graph, std::move(first)));
  }

  while (static_cast<int>(found.size()) < k) {
    const std::vector<NodeId>& prev = found.back().nodes;
    for (std::size_t spur_index = 0; spur_index + 1 < prev.size(); ++spur_index) {
      const NodeId spur = prev[spur_index];
      const std::span<const NodeId> root_path(prev.data(), spur_index + 1);
      std::set<EdgeKey> blocked_edges;
      for (const auto& p : found) {
        if (p.nodes.size() > spur_index + 1 &&
            std::equal(root_path.begin(), root_path.end(), p.nodes.begin()))
          blocked_edges.insert(edge_key(p.nodes[spur_index], p.nodes[spur_index + 1]));
      }
      std::set<NodeId> blocked_nodes(root_path.begin(), root_path.end() - 1);
      auto tail = lexicographic_shortest(
          graph, spur, dst, metric,
          [&](NodeId v) { return node_ok(v) && !blocked_nodes.contains(v); },
          [&](NodeId a, NodeId b) { return !blocked_edges.contains(edge_key(a, b)); });
      if (tail.empty()) continue;
      std::vector<NodeId> total(root_path.begin(), root_path.end() - 1);
      total.insert(total.end(), tail.begin(), tail.end());
      if (seen.insert(total).second) candidates.insert(make_path(graph, std::move(total)));
    }
    if (candidates.empty()) break;
    found.push_back(*candidates.begin());
    candidates.erase(candidates.begin());
  }
  return found;
}

}  // namespace detail

TreeRecord prim_mst(const NetworkGraph& graph) {
  if (graph.node_count() == 0) throw GraphError("graph not connected");
  std::set<NodeId> all;
  for (NodeId v = 0; v < graph.node_count(); ++v) all.insert(v);
  auto edges = detail::prim_induced(graph, all);
  return make_tree(graph, 0, all, std::move(edges));
}

std::vector<PathRecord> k_shortest_loopless_paths(const NetworkGraph& graph, NodeId src,
                                                  NodeId dst, int k, Metric metric) {
  if (!graph.has_node(src) || !graph.has_node(dst)) throw GraphError("node not found");
  if (src == dst) throw GraphError("source equals destination");
  if (k < 1) throw GraphError("k must be positive");
  return detail::k_shortest(graph, src, dst, k, metric, [](NodeId) { return true; });
}

// ---------------------------------------------------------------------------
// Exhaustive Steiner oracle

TreeRecord steiner_optimal(const NetworkGraph& graph, const std::set<NodeId>& terminals) {
  const int n = graph.node_count();
  if (n > kSteinerOracleNodeLimit) throw GraphError("oracle size limit");
  if (terminals.empty()) throw GraphError("terminal set is empty");
  for (NodeId t : terminals)
    if (!graph.has_node(t)) throw GraphError("node not found");
  const NodeId root = *terminals.begin();
  if (terminals.size() == 1) return make_tree(graph, root, terminals, {});

  // All-pairs shortest paths (cost) with explicit paths for expansion.
  std::vector<detail::SearchResult> sp;
  sp.reserve(n);
  for (NodeId s = 0; s < n; ++s) {
    const NodeId sources[] = {s};
    sp.push_back(detail::dijkstra(graph, sources, Metric::Cost));
  }
  for (NodeId t : terminals)
    if (sp[root].dist[t] == kInfinity) throw GraphError("terminals not connected");

  std::vector<NodeId> optional_nodes;
  for (NodeId v = 0; v < n; ++v)
    if (!terminals.contains(v) && sp[root].dist[v] != kInfinity) optional_nodes.push_back(v);

  // Prim on the metric closure of a node list; returns (cost, closure edges).
  const auto closure_mst = [&](const std::vector<NodeId>& members) {
    const std::size_t m = members.size();
    std::vector<double> best(m, kInfinity);
    std::vector<int> link(m, -1);
    std::vector<bool> in(m, false);
    std::vector<std::pair<NodeId, NodeId>> chosen;
    double total = 0.0;
    best[0] = 0.0;
    for (std::size_t step = 0; step < m; ++step) {
      int pick = -1;
      for (std::size_t i = 0; i < m; ++i)
        if (!in[i] && (pick < 0 || best[i] < best[pick])) pick = static_cast<int>(i);
      in[pick] = true;
      total += best[pick];
      if (link[pick] >= 0) chosen.emplace_back(members[link[pick]], members[pick]);
      for (std::size_t i = 0; i < m; ++i) {
        const double w = sp[members[pick]].dist[members[i]];
        if (!in[i] && w < best[i]) {
          best[i] = w;
          link[i] = pick;
        }
      }
    }
    return std::pair{total, chosen};
  };

  double best_cost = kInfinity;
  std::vector<std::pair<NodeId, NodeId>> best_edges;
  const std::uint32_t subsets = 1u << optional_nodes.size();
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    std::vector<NodeId> members(terminals.begin(), terminals.end());
    for (std::size_t i = 0; i < optional_nodes.size(); ++i)
      if (mask & (1u << i)) members.push_back(optional_nodes[i]);
    std::sort(members.begin(), members.end());
    auto [cost, chosen] = closure_mst(members);
    if (cost < best_cost) {
      best_cost = cost;
      best_edges = std::move(chosen);
    }
  }

  // Expand closure edges into graph paths, re-span and prune.
  std::set<NodeId> span_nodes;
  for (const auto& [a, b] : best_edges)
    for (NodeId v : detail::extract_path(sp[a], b)) span_nodes.insert(v);
  auto edges = detail::prim_induced(graph, span_nodes);
  edges = prune_leaves(std::move(edges), root, terminals);
  return make_tree(graph, root, terminals, std::move(edges));
}

// ---------------------------------------------------------------------------
// Waxman generator

namespace {

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<Point> waxman_positions(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point> pts(std::max(n, 0));
  for (auto& p : pts) {
    p.x = unit(rng);
    p.y = unit(rng);
  }
  return pts;
}

double waxman_edge_weight(double d) { return 1.0 + 9.0 * d / std::sqrt(2.0); }

NetworkGraph waxman_random(const WaxmanParams& params) {
  if (params.n < 1) throw GraphError("waxman requires n >= 1");
  std::mt19937_64 rng(params.seed);
  std::vector<Point> pts(params.n);
  for (auto& p : pts) {
    p.x = unit(rng);
    p.y = unit(rng);
  }
  const double max_dist = std::sqrt(2.0);
  NetworkGraph g(params.n);
  for (NodeId u = 0; u < params.n; ++u) {
    for (NodeId v = u + 1; v < params.n; ++v) {
      const double d = std::hypot(pts[u].x - pts[v].x, pts[u].y - pts[v].y);
      const double p = params.alpha * std::exp(-d / (params.beta * max_dist));
      if (unit(rng) < p) {
        const double w = waxman_edge_weight(d);
        g.add_edge(u, v, EdgeAttrs{w, w, params.capacity});
      }
    }
  }
  return g;
}

NetworkGraph waxman_connected(const WaxmanParams& params) {
  NetworkGraph g = waxman_random(params);
  const auto pts = waxman_positions(params.n, params.seed);
  const auto dist = [&](NodeId a, NodeId b) {
    return std::hypot(pts[a].x - pts[b].x, pts[a].y - pts[b].y);
  };
  for (;;) {
    const auto label = g.components();
    NodeId other = kNoNode;
    for (NodeId v = 0; v < params.n; ++v)
      if (label[v] != 0) {
        other = label[v];
        break;
      }
    if (other == kNoNode) break;
    // Shortest Euclidean pair between the main component and component `other`.
    std::tuple<double, NodeId, NodeId> best{kInfinity, kNoNode, kNoNode};
    for (NodeId a = 0; a < params.n; ++a) {
      if (label[a] != 0) continue;
      for (NodeId b = 0; b < params.n; ++b) {
        if (label[b] != other) continue;
        best = std::min(best, std::tuple{dist(a, b), a, b});
      }
    }
    const auto [d, a, b] = best;
    const double w = waxman_edge_weight(d);
    g.add_edge(a, b, EdgeAttrs{w, w, params.capacity});
  }
  return g;
}

}  // namespace netlab
