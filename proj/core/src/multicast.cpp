#include "netlab/multicast.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <deque>
#include <random>
#include <stdexcept>
#include <tuple>

#include "search.hpp"

namespace netlab::multicast {

std::string_view to_string(CostMode mode) {
  return mode == CostMode::Utilization ? "utilization" : "congestion";
}

std::optional<CostMode> parse_cost_mode(std::string_view text) {
  if (text == "utilization") return CostMode::Utilization;
  if (text == "congestion") return CostMode::Congestion;
  return std::nullopt;
}

double MulticastRequest::bound(NodeId destination) const {
  auto it = delay_bounds.find(destination);
  return it == delay_bounds.end() ? kInfinity : it->second;
}

double tree_cost(const NetworkGraph& graph, const TreeRecord& tree, CostMode mode) {
  double sum = 0.0, worst = 0.0;
  for (const auto& [a, b] : tree.edges) {
    const double c = graph.attrs(a, b).cost;
    sum += c;
    worst = std::max(worst, c);
  }
  return mode == CostMode::Utilization ? sum : worst;
}

std::size_t edge_churn(const std::set<EdgeKey>& before, const std::set<EdgeKey>& after) {
  std::vector<EdgeKey> diff;
  std::ranges::set_symmetric_difference(before, after, std::back_inserter(diff));
  return diff.size();
}

namespace {

bool within(double value, double limit) {
  return value <= limit + kSumTolerance * std::max(1.0, std::abs(limit));
}

void require_nodes(const NetworkGraph& graph, NodeId source, const std::set<NodeId>& destinations) {
  if (!graph.has_node(source)) throw GraphError(fmt::format("node not found: {}", source));
  for (NodeId d : destinations)
    if (!graph.has_node(d)) throw GraphError(fmt::format("node not found: {}", d));
}

std::set<NodeId> with_source(NodeId source, std::set<NodeId> destinations) {
  destinations.insert(source);
  return destinations;
}

std::map<NodeId, std::vector<NodeId>> adjacency_of(const std::set<EdgeKey>& edges) {
  std::map<NodeId, std::vector<NodeId>> adj;
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& [n, list] : adj) std::ranges::sort(list);
  return adj;
}

std::set<NodeId> reachable(const std::set<EdgeKey>& edges, NodeId from) {
  const auto adj = adjacency_of(edges);
  std::set<NodeId> seen{from};
  std::deque<NodeId> queue{from};
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    auto it = adj.find(u);
    if (it == adj.end()) continue;
    for (NodeId v : it->second)
      if (seen.insert(v).second) queue.push_back(v);
  }
  return seen;
}

void add_path(std::set<EdgeKey>& edges, const std::vector<NodeId>& path) {
  for (std::size_t i = 1; i < path.size(); ++i) edges.insert(edge_key(path[i - 1], path[i]));
}

// KMB over the nodes accepted by `node_ok`; returns pruned tree edges.
template <class NodeOk>
std::set<EdgeKey> kmb_edges(const NetworkGraph& graph, NodeId root, const std::set<NodeId>& terminals,
                            NodeOk node_ok) {
  const std::vector<NodeId> members(terminals.begin(), terminals.end());
  const std::size_t m = members.size();
  std::vector<detail::SearchResult> sp;
  sp.reserve(m);
  for (NodeId t : members) {
    const NodeId sources[] = {t};
    sp.push_back(detail::dijkstra(graph, sources, Metric::Cost, node_ok));
  }
  const std::size_t root_index =
      static_cast<std::size_t>(std::ranges::find(members, root) - members.begin());
  std::vector<NodeId> unreachable;
  for (NodeId t : members)
    if (sp[root_index].dist[t] == kInfinity) unreachable.push_back(t);
  if (!unreachable.empty())
    throw MulticastError(
        fmt::format("unreachable from {}: {}", root, fmt::join(unreachable, ",")), unreachable);

  // Prim on the metric closure from the root; ties to the lower index.
  std::vector<double> best(m, kInfinity);
  std::vector<std::size_t> link(m, m);
  std::vector<bool> in(m, false);
  best[root_index] = 0.0;
  std::set<NodeId> span{root};
  for (std::size_t step = 0; step < m; ++step) {
    std::size_t pick = m;
    for (std::size_t i = 0; i < m; ++i)
      if (!in[i] && (pick == m || best[i] < best[pick])) pick = i;
    in[pick] = true;
    if (link[pick] != m)
      for (NodeId v : detail::extract_path(sp[link[pick]], members[pick])) span.insert(v);
    for (std::size_t i = 0; i < m; ++i) {
      const double w = sp[pick].dist[members[i]];
      if (!in[i] && w < best[i]) {
        best[i] = w;
        link[i] = pick;
      }
    }
  }
  return prune_leaves(detail::prim_induced(graph, span), root, terminals);
}

// ---------------------------------------------------------------------------
// BSMA internals

struct Objective {
  double primary = 0.0;  // the mode's cost
  double sum = 0.0;
};

Objective objective_of(const NetworkGraph& graph, const TreeRecord& tree, CostMode mode) {
  return {tree_cost(graph, tree, mode), tree.cost};
}

bool improves(const Objective& a, const Objective& b, CostMode mode) {
  const auto less = [](double x, double y) {
    return x < y - kSumTolerance * std::max(1.0, std::abs(y));
  };
  if (mode == CostMode::Utilization) return less(a.sum, b.sum);
  if (less(a.primary, b.primary)) return true;
  return !less(b.primary, a.primary) && less(a.sum, b.sum);
}

struct Superedge {
  std::vector<NodeId> nodes;
  double sum = 0.0;
  double max = 0.0;
};

std::vector<Superedge> superedges(const NetworkGraph& graph, const TreeRecord& tree,
                                  const std::set<NodeId>& terminals, CostMode mode) {
  const auto adj = adjacency_of(tree.edges);
  const auto is_key = [&](NodeId v) {
    return terminals.contains(v) || v == tree.root || adj.at(v).size() != 2;
  };
  std::vector<Superedge> out;
  for (const auto& [u, nbrs] : adj) {
    if (!is_key(u)) continue;
    for (NodeId first : nbrs) {
      Superedge s;
      s.nodes = {u, first};
      while (!is_key(s.nodes.back())) {
        const auto& next = adj.at(s.nodes.back());
        s.nodes.push_back(next[0] == s.nodes[s.nodes.size() - 2] ? next[1] : next[0]);
      }
      if (s.nodes.front() > s.nodes.back()) continue;  // found again from the other end
      for (std::size_t i = 1; i < s.nodes.size(); ++i) {
        const double c = graph.attrs(s.nodes[i - 1], s.nodes[i]).cost;
        s.sum += c;
        s.max = std::max(s.max, c);
      }
      out.push_back(std::move(s));
    }
  }
  const auto key = [mode](const Superedge& s) {
    return mode == CostMode::Utilization ? std::tuple{s.sum, 0.0} : std::tuple{s.max, s.sum};
  };
  std::ranges::sort(out, [&](const Superedge& a, const Superedge& b) {
    if (key(a) != key(b)) return key(a) > key(b);
    return a.nodes < b.nodes;
  });
  return out;
}

}  // namespace

TreeRecord kmb(const NetworkGraph& graph, NodeId source, const std::set<NodeId>& destinations) {
  require_nodes(graph, source, destinations);
  const std::set<NodeId> terminals = with_source(source, destinations);
  auto edges = kmb_edges(graph, source, terminals, detail::AllowAll{});
  return make_tree(graph, source, terminals, std::move(edges));
}

TreeRecord minimum_delay_tree(const NetworkGraph& graph, NodeId source,
                              const std::set<NodeId>& destinations) {
  require_nodes(graph, source, destinations);
  const NodeId sources[] = {source};
  const auto search = detail::dijkstra(graph, sources, Metric::Delay);
  std::vector<NodeId> unreachable;
  std::set<EdgeKey> edges;
  for (NodeId d : destinations) {
    if (search.dist[d] == kInfinity) {
      unreachable.push_back(d);
      continue;
    }
    add_path(edges, detail::extract_path(search, d));
  }
  if (!unreachable.empty())
    throw MulticastError(
        fmt::format("unreachable from {}: {}", source, fmt::join(unreachable, ",")), unreachable);
  return make_tree(graph, source, with_source(source, destinations), std::move(edges));
}

BsmaResult bsma(const NetworkGraph& graph, const MulticastRequest& request,
                const BsmaOptions& options) {
  const NodeId source = request.source;
  const std::set<NodeId> terminals = with_source(source, request.destinations);
  TreeRecord tree = minimum_delay_tree(graph, source, request.destinations);

  std::vector<NodeId> infeasible;
  for (NodeId d : request.destinations)
    if (d != source && !within(tree.delay.at(d), request.bound(d))) infeasible.push_back(d);
  if (!infeasible.empty())
    throw MulticastError(fmt::format("delay bound below shortest delay for destination {}",
                                     fmt::join(infeasible, ",")),
                         infeasible);

  const auto feasible = [&](const TreeRecord& t) {
    for (NodeId d : request.destinations)
      if (!within(t.delay.at(d), request.bound(d))) return false;
    return true;
  };

  BsmaResult result;
  result.trace.push_back({0, tree_cost(graph, tree, request.mode), tree.cost, {}, {}, 0, 0, tree.edges});
  const int n = graph.node_count();
  const NodeId near_end = n, far_end = n + 1;

  for (int iteration = 1; iteration <= options.max_iterations; ++iteration) {
    const Objective current = objective_of(graph, tree, request.mode);
    BsmaStep step;
    step.iteration = iteration;
    std::optional<TreeRecord> accepted;

    for (const Superedge& s : superedges(graph, tree, terminals, request.mode)) {
      std::set<EdgeKey> rest = tree.edges;
      for (std::size_t i = 1; i < s.nodes.size(); ++i) rest.erase(edge_key(s.nodes[i - 1], s.nodes[i]));
      const std::set<NodeId> near = reachable(rest, source);
      const std::set<NodeId> far =
          reachable(rest, near.contains(s.nodes.front()) ? s.nodes.back() : s.nodes.front());

      // Virtual endpoints stand for the two components; tree-internal links are left out.
      NetworkGraph aux(n + 2);
      for (const Edge& e : graph.edges()) {
        if ((near.contains(e.u) && near.contains(e.v)) || (far.contains(e.u) && far.contains(e.v)))
          continue;
        aux.add_edge(e.u, e.v, e.attrs);
      }
      for (NodeId a : near) aux.add_edge(near_end, a, {0, 0, 1});
      for (NodeId b : far) aux.add_edge(far_end, b, {0, 0, 1});

      int examined = 0;
      for (const PathRecord& p :
           k_shortest_loopless_paths(aux, near_end, far_end, options.k, Metric::Cost)) {
        ++examined;
        const std::vector<NodeId> path(p.nodes.begin() + 1, p.nodes.end() - 1);
        const bool clean = std::all_of(path.begin() + 1, path.end() - 1, [&](NodeId v) {
          return !near.contains(v) && !far.contains(v);
        });
        if (!clean) continue;
        std::set<EdgeKey> edges = rest;
        add_path(edges, path);
        TreeRecord candidate =
            make_tree(graph, source, terminals, prune_leaves(std::move(edges), source, terminals));
        if (feasible(candidate) &&
            improves(objective_of(graph, candidate, request.mode), current, request.mode)) {
          step.removed = s.nodes;
          step.added = path;
          accepted = std::move(candidate);
          break;
        }
      }
      step.candidates_examined += examined;
      if (accepted) break;
      if (examined == options.k) ++step.capped_searches;
    }

    if (!accepted) {
      result.final_round = step;
      break;
    }
    tree = std::move(*accepted);
    step.cost = tree_cost(graph, tree, request.mode);
    step.edge_cost_sum = tree.cost;
    step.edges = tree.edges;
    result.trace.push_back(std::move(step));
  }
  result.tree = std::move(tree);
  return result;
}

SphResult sph_degree_constrained(const NetworkGraph& graph, NodeId source,
                                 const std::set<NodeId>& destinations,
                                 std::optional<int> degree_limit) {
  if (degree_limit && *degree_limit < 2) throw std::invalid_argument("degree limit must be at least 2");
  require_nodes(graph, source, destinations);
  std::set<NodeId> in_tree{source};
  std::map<NodeId, int> degree;
  std::set<EdgeKey> edges;
  std::set<NodeId> pending = destinations;
  pending.erase(source);

  while (!pending.empty()) {
    std::vector<NodeId> attach;
    for (NodeId v : in_tree)
      if (!degree_limit || degree[v] < *degree_limit) attach.push_back(v);
    const auto search = detail::dijkstra(graph, attach, Metric::Cost, [&](NodeId v) {
      return !in_tree.contains(v) || !degree_limit || degree[v] < *degree_limit;
    });
    NodeId pick = kNoNode;
    for (NodeId d : pending)
      if (search.dist[d] != kInfinity && (pick == kNoNode || search.dist[d] < search.dist[pick]))
        pick = d;
    if (pick == kNoNode) return {std::nullopt, pending};
    const std::vector<NodeId> path = detail::extract_path(search, pick);
    for (std::size_t i = 1; i < path.size(); ++i) {
      edges.insert(edge_key(path[i - 1], path[i]));
      ++degree[path[i - 1]];
      ++degree[path[i]];
    }
    for (NodeId v : path) {
      in_tree.insert(v);
      pending.erase(v);
    }
  }
  return {make_tree(graph, source, with_source(source, destinations), std::move(edges)), {}};
}

// ---------------------------------------------------------------------------
// Dynamic membership

SessionState start_session(const NetworkGraph& graph, NodeId source) {
  SessionState s;
  s.tree = make_tree(graph, source, {source}, {});
  return s;
}

namespace {

// Relay nodes reachable from the change point through relays only.
std::set<NodeId> damaged_region(const SessionState& s, NodeId anchor) {
  const auto adj = adjacency_of(s.tree.edges);
  const auto relay = [&](NodeId v) { return v != s.tree.root && !s.members.contains(v); };
  std::set<NodeId> region;
  std::deque<NodeId> queue;
  const auto visit = [&](NodeId v) {
    if (relay(v) && region.insert(v).second) queue.push_back(v);
  };
  visit(anchor);
  if (auto it = adj.find(anchor); it != adj.end())
    for (NodeId v : it->second) visit(v);
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (NodeId v : adj.at(u)) visit(v);
  }
  return region;
}

std::optional<TreeRecord> rebuild_region(const NetworkGraph& graph, const SessionState& s,
                                         const std::set<NodeId>& region) {
  std::set<NodeId> border;
  std::set<EdgeKey> forest;
  for (const auto& [a, b] : s.tree.edges) {
    const bool ia = region.contains(a), ib = region.contains(b);
    if (!ia && !ib) {
      forest.insert({a, b});
      continue;
    }
    if (!ia) border.insert(a);
    if (!ib) border.insert(b);
  }
  std::set<NodeId> fixed = s.tree.nodes();
  fixed.insert(s.tree.root);
  const auto usable = [&](NodeId v) { return !fixed.contains(v) || region.contains(v) || border.contains(v); };
  const NodeId root = border.contains(s.tree.root) ? s.tree.root : *border.begin();
  std::set<EdgeKey> patch;
  try {
    patch = kmb_edges(graph, root, border, usable);
  } catch (const MulticastError&) {
    return std::nullopt;
  }
  forest.insert(patch.begin(), patch.end());
  const std::set<NodeId> terminals = with_source(s.tree.root, s.members);
  return make_tree(graph, s.tree.root, terminals, prune_leaves(std::move(forest), s.tree.root, terminals));
}

}  // namespace

UpdateOutcome dynamic_update(const NetworkGraph& graph, const SessionState& state,
                             const MembershipChange& change, const Policy& policy) {
  const NodeId source = state.tree.root;
  const NodeId x = change.node;
  if (!graph.has_node(x)) throw GraphError(fmt::format("node not found: {}", x));
  UpdateOutcome out;
  out.state = state;
  SessionState& s = out.state;
  std::set<EdgeKey> edges = s.tree.edges;
  NodeId anchor = x;

  if (change.kind == MembershipChange::Kind::Join) {
    if (x == source || s.members.contains(x)) return out;
    std::set<NodeId> tree_nodes = s.tree.nodes();
    tree_nodes.insert(source);
    if (!tree_nodes.contains(x)) {
      const std::vector<NodeId> sources(tree_nodes.begin(), tree_nodes.end());
      const auto search = detail::dijkstra(graph, sources, Metric::Cost);
      if (search.dist[x] == kInfinity)
        throw MulticastError(fmt::format("join target {} unreachable from the tree", x), {x});
      add_path(edges, detail::extract_path(search, x));
    }
    s.members.insert(x);
  } else {
    if (!s.members.contains(x)) throw MulticastError(fmt::format("node {} is not a member", x), {x});
    s.members.erase(x);
    const std::set<EdgeKey> kept = prune_leaves(edges, source, with_source(source, s.members));
    std::set<NodeId> remaining;
    for (const auto& [a, b] : kept) {
      remaining.insert(a);
      remaining.insert(b);
    }
    if (!remaining.contains(x)) {
      anchor = source;
      for (const auto& [a, b] : edges)
        if (!kept.contains({a, b}) && (remaining.contains(a) || remaining.contains(b)))
          anchor = remaining.contains(a) ? a : b;
    }
    edges = kept;
  }
  s.tree = make_tree(graph, source, with_source(source, s.members), std::move(edges));

  const std::set<NodeId> region = damaged_region(s, anchor);
  if (!region.empty()) {
    out.region = *region.begin();
    if (policy.kind == Policy::Kind::Aries) {
      int& count = s.damage.counts[out.region];
      ++count;
      if (policy.threshold && count >= *policy.threshold) {
        s.damage.counts.erase(out.region);
        out.rearranged = true;
        if (auto rebuilt = rebuild_region(graph, s, region);
            rebuilt && improves({rebuilt->cost, rebuilt->cost}, {s.tree.cost, s.tree.cost},
                                CostMode::Utilization))
          s.tree = std::move(*rebuilt);
      }
    }
  }
  out.churn = edge_churn(state.tree.edges, s.tree.edges);
  return out;
}

// ---------------------------------------------------------------------------
// Random instances

MulticastInstance random_instance(const WaxmanParams& params, int min_destinations,
                                  int max_destinations) {
  if (min_destinations < 1 || max_destinations < min_destinations || max_destinations >= params.n)
    throw std::invalid_argument("destination count range does not fit the graph");
  const NetworkGraph base = waxman_connected(params);
  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<int> cost(1, 10);
  MulticastInstance out;
  out.graph = NetworkGraph(params.n);
  for (const Edge& e : base.edges()) {
    EdgeAttrs a = e.attrs;
    a.cost = cost(rng);
    out.graph.add_edge(e.u, e.v, a);
  }
  std::uniform_int_distribution<NodeId> node(0, params.n - 1);
  const int count = std::uniform_int_distribution<int>(min_destinations, max_destinations)(rng);
  out.source = node(rng);
  while (static_cast<int>(out.destinations.size()) < count) {
    const NodeId d = node(rng);
    if (d != out.source) out.destinations.insert(d);
  }
  return out;
}

std::vector<MembershipChange> random_membership_sequence(int node_count, NodeId source, int events,
                                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::set<NodeId> members;
  std::vector<MembershipChange> out;
  for (int e = 0; e < events; ++e) {
    std::vector<NodeId> outside;
    for (NodeId v = 0; v < node_count; ++v)
      if (v != source && !members.contains(v)) outside.push_back(v);
    const bool join = members.empty() || (!outside.empty() && coin(rng) < 0.6);
    if (join && outside.empty()) break;
    const std::vector<NodeId> pool = join ? outside : std::vector<NodeId>(members.begin(), members.end());
    const NodeId v = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    if (join) {
      members.insert(v);
      out.push_back({MembershipChange::Kind::Join, v});
    } else {
      members.erase(v);
      out.push_back({MembershipChange::Kind::Leave, v});
    }
  }
  return out;
}

}  // namespace netlab::multicast
