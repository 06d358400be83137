#include "netlab/unicast.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>

#include "search.hpp"

namespace netlab::unicast {

LoopCheck check_loop_freedom(const RoutingSnapshot& snapshot, NodeId destination) {
  const int n = static_cast<int>(snapshot.size());
  auto next = [&](NodeId v) -> NodeId {
    if (v == destination) return kNoNode;
    const auto& table = snapshot[v];
    if (destination < 0 || destination >= static_cast<int>(table.size())) return kNoNode;
    const NodeId s = table[destination].successor;
    return s >= 0 && s < n ? s : kNoNode;
  };
  // 0 = unvisited, 1 = on current walk, 2 = finished
  std::vector<int> mark(n, 0);
  for (NodeId start = 0; start < n; ++start) {
    if (mark[start] != 0) continue;
    std::vector<NodeId> walk;
    NodeId v = start;
    while (v != kNoNode && mark[v] == 0) {
      mark[v] = 1;
      walk.push_back(v);
      v = next(v);
    }
    if (v != kNoNode && mark[v] == 1) {
      auto first = std::find(walk.begin(), walk.end(), v);
      std::vector<NodeId> cycle(first, walk.end());
      std::rotate(cycle.begin(), std::min_element(cycle.begin(), cycle.end()), cycle.end());
      return {false, std::move(cycle)};
    }
    for (NodeId w : walk) mark[w] = 2;
  }
  return {};
}

namespace {

RouteEntry own_entry(NodeId self) { return {self, 0.0, self, kNoNode, 0.0}; }

}  // namespace

// ---------------------------------------------------------------------------
// DBF

DbfNode::DbfNode(NodeId self, int node_count, double infinity_cap)
    : self_(self),
      n_(node_count),
      cap_(infinity_cap),
      dist_(node_count, kInfinity),
      succ_(node_count, kNoNode),
      advertised_(node_count, kInfinity) {
  dist_[self] = 0.0;
  succ_[self] = self;
  advertised_[self] = 0.0;
}

void DbfNode::on_start(Context& ctx) {
  for (const Adjacent& a : ctx.neighbors()) {
    link_cost_[a.node] = a.attrs.cost;
    reported_[a.node].assign(n_, kInfinity);
    reported_[a.node][a.node] = 0.0;
  }
  // Force the first advertisement of every reachable entry.
  advertised_[self_] = kInfinity;
  recompute(ctx);
}

void DbfNode::on_message(Context& ctx, NodeId from, const Message& m) {
  auto it = reported_.find(from);
  if (it == reported_.end()) {
    ctx.count_protocol_error();
    return;
  }
  for (const auto& [dest, d] : m.entries) {
    if (dest < 0 || dest >= n_) continue;
    it->second[dest] = d;
  }
  recompute(ctx);
}

void DbfNode::on_link_up(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs) {
  link_cost_[neighbor] = attrs.cost;
  reported_[neighbor].assign(n_, kInfinity);
  reported_[neighbor][neighbor] = 0.0;
  recompute(ctx, neighbor);
}

void DbfNode::on_link_down(Context& ctx, NodeId neighbor) {
  link_cost_.erase(neighbor);
  reported_.erase(neighbor);
  recompute(ctx);
}

void DbfNode::on_link_change(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs) {
  link_cost_[neighbor] = attrs.cost;
  recompute(ctx);
}

void DbfNode::recompute(Context& ctx, std::optional<NodeId> full_table_to) {
  for (NodeId j = 0; j < n_; ++j) {
    if (j == self_) continue;
    double best = kInfinity;
    NodeId via = kNoNode;
    for (const auto& [k, cost] : link_cost_) {
      const double d = cost + reported_[k][j];
      if (d < best) {
        best = d;
        via = k;
      }
    }
    if (best >= cap_) {
      best = kInfinity;
      via = kNoNode;
    }
    dist_[j] = best;
    succ_[j] = via;
  }

  DbfMessage changes;
  DbfMessage full;
  for (NodeId j = 0; j < n_; ++j) {
    if (dist_[j] != advertised_[j]) changes.entries.emplace_back(j, dist_[j]);
    if (dist_[j] != kInfinity) full.entries.emplace_back(j, dist_[j]);
  }
  advertised_ = dist_;
  for (const Adjacent& a : ctx.neighbors()) {
    if (full_table_to && a.node == *full_table_to) {
      if (!full.entries.empty()) ctx.send(a.node, full);
    } else if (!changes.entries.empty()) {
      ctx.send(a.node, changes);
    }
  }
}

std::vector<RouteEntry> DbfNode::table() const {
  std::vector<RouteEntry> out(n_);
  for (NodeId j = 0; j < n_; ++j) out[j] = {j, dist_[j], succ_[j], kNoNode, kInfinity};
  out[self_] = own_entry(self_);
  return out;
}

// ---------------------------------------------------------------------------
// Directed shortest paths over link-state records

DirectedSpt directed_spt(NodeId root, int node_count,
                         const std::map<NodeId, std::vector<std::pair<NodeId, double>>>& out_links) {
  DirectedSpt spt{std::vector<double>(node_count, kInfinity),
                  std::vector<NodeId>(node_count, kNoNode)};
  std::vector<bool> done(node_count, false);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  spt.dist[root] = 0.0;
  heap.emplace(0.0, root);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (done[u] || d > spt.dist[u]) continue;
    done[u] = true;
    auto it = out_links.find(u);
    if (it == out_links.end()) continue;
    for (const auto& [v, cost] : it->second) {
      if (v < 0 || v >= node_count || done[v]) continue;
      const double nd = d + cost;
      if (nd < spt.dist[v]) {
        spt.dist[v] = nd;
        spt.parent[v] = u;
        heap.emplace(nd, v);
      } else if (nd == spt.dist[v] && spt.parent[v] != kNoNode && u < spt.parent[v]) {
        spt.parent[v] = u;
      }
    }
  }
  return spt;
}

std::vector<RouteEntry> routes_from_spt(NodeId self, const DirectedSpt& spt) {
  const int n = static_cast<int>(spt.dist.size());
  std::vector<RouteEntry> out(n);
  for (NodeId j = 0; j < n; ++j) {
    out[j].destination = j;
    if (j == self) {
      out[j] = own_entry(self);
      continue;
    }
    if (spt.dist[j] == kInfinity) continue;
    out[j].distance = spt.dist[j];
    out[j].predecessor = spt.parent[j];
    NodeId hop = j;
    while (spt.parent[hop] != self) hop = spt.parent[hop];
    out[j].successor = hop;
  }
  return out;
}

namespace {

using OutLinks = std::map<NodeId, std::vector<std::pair<NodeId, double>>>;

}  // namespace

// ---------------------------------------------------------------------------
// ILS

IlsNode::IlsNode(NodeId self, int node_count) : self_(self), n_(node_count) {}

LinkStateRecord IlsNode::originate(NodeId neighbor, double cost) {
  LinkStateRecord r{self_, neighbor, cost, ++seq_};
  topology_[{self_, neighbor}] = r;
  return r;
}

void IlsNode::flood(Context& ctx, const std::vector<LinkStateRecord>& records, NodeId except) {
  if (records.empty()) return;
  for (const Adjacent& a : ctx.neighbors())
    if (a.node != except) ctx.send(a.node, LinkStateMessage{records});
}

void IlsNode::on_start(Context& ctx) {
  std::vector<LinkStateRecord> own;
  for (const Adjacent& a : ctx.neighbors()) own.push_back(originate(a.node, a.attrs.cost));
  flood(ctx, own, kNoNode);
}

void IlsNode::on_message(Context& ctx, NodeId from, const Message& m) {
  std::vector<LinkStateRecord> accepted;
  for (const LinkStateRecord& r : m.records) {
    auto it = topology_.find({r.head, r.tail});
    if (it != topology_.end() && it->second.seq >= r.seq) continue;
    topology_[{r.head, r.tail}] = r;
    accepted.push_back(r);
  }
  flood(ctx, accepted, from);
}

void IlsNode::on_link_up(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs) {
  const LinkStateRecord r = originate(neighbor, attrs.cost);
  LinkStateMessage all;
  for (const auto& [key, rec] : topology_) all.records.push_back(rec);
  ctx.send(neighbor, std::move(all));
  flood(ctx, {r}, neighbor);
}

void IlsNode::on_link_down(Context& ctx, NodeId neighbor) {
  flood(ctx, {originate(neighbor, kInfinity)}, kNoNode);
}

void IlsNode::on_link_change(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs) {
  flood(ctx, {originate(neighbor, attrs.cost)}, kNoNode);
}

std::vector<RouteEntry> IlsNode::table() const {
  OutLinks out;
  for (const auto& [key, r] : topology_)
    if (r.cost != kInfinity) out[r.head].emplace_back(r.tail, r.cost);
  return routes_from_spt(self_, directed_spt(self_, n_, out));
}

// ---------------------------------------------------------------------------
// LVA

LvaNode::LvaNode(NodeId self, int node_count) : self_(self), n_(node_count) {
  routes_.resize(n_);
  for (NodeId j = 0; j < n_; ++j) routes_[j].destination = j;
  routes_[self] = own_entry(self);
}

void LvaNode::stamp_own(NodeId neighbor, double cost) {
  freshest_[{self_, neighbor}] = LinkStateRecord{self_, neighbor, cost, ++seq_};
}

std::vector<RouteEntry> LvaNode::compute_routes() const {
  // Each neighbour's tree comes from its reported source graph at the
  // freshest known costs; a destination goes through the neighbour offering
  // the shortest distance, ties to the lower predecessor then lower neighbour.
  std::vector<RouteEntry> routes(n_);
  for (NodeId j = 0; j < n_; ++j) routes[j].destination = j;
  routes[self_] = own_entry(self_);
  for (const auto& [nbr, cost] : own_links_) {
    OutLinks out;
    if (auto rep = reported_.find(nbr); rep != reported_.end()) {
      for (const auto& [l, r] : rep->second) {
        if (l.first == self_ || l.second == self_) continue;
        const LinkStateRecord& fresh = freshest_.at(l);
        if (fresh.cost != kInfinity) out[l.first].emplace_back(l.second, fresh.cost);
      }
    }
    const DirectedSpt spt = directed_spt(nbr, n_, out);
    for (NodeId j = 0; j < n_; ++j) {
      if (j == self_ || spt.dist[j] == kInfinity) continue;
      const double d = cost + spt.dist[j];
      const NodeId pred = j == nbr ? self_ : spt.parent[j];
      RouteEntry& e = routes[j];
      if (d < e.distance || (d == e.distance && pred < e.predecessor)) {
        e.distance = d;
        e.successor = nbr;
        e.predecessor = pred;
      }
    }
  }
  return routes;
}

void LvaNode::recompute(Context& ctx, std::optional<NodeId> new_neighbor) {
  routes_ = compute_routes();
  std::map<DirectedLink, LinkStateRecord> next;
  for (NodeId j = 0; j < n_; ++j) {
    if (j == self_ || routes_[j].successor == kNoNode) continue;
    const DirectedLink l{routes_[j].predecessor, j};
    next[l] = freshest_.at(l);
  }

  std::vector<LinkStateRecord> diff;
  for (const auto& [l, r] : next) {
    auto it = source_graph_.find(l);
    if (it == source_graph_.end() || !(it->second == r)) diff.push_back(r);
  }
  for (const auto& [l, r] : source_graph_) {
    if (next.count(l)) continue;
    LinkStateRecord del = freshest_.count(l) ? freshest_.at(l) : r;
    del.cost = kInfinity;
    diff.push_back(del);
  }
  source_graph_ = std::move(next);

  for (const Adjacent& a : ctx.neighbors()) {
    if (new_neighbor && a.node == *new_neighbor) {
      LinkStateMessage full;
      for (const auto& [l, r] : source_graph_) full.records.push_back(r);
      if (!full.records.empty()) ctx.send(a.node, std::move(full));
    } else if (!diff.empty()) {
      ctx.send(a.node, LinkStateMessage{diff});
    }
  }
}

void LvaNode::on_start(Context& ctx) {
  for (const Adjacent& a : ctx.neighbors()) {
    own_links_[a.node] = a.attrs.cost;
    stamp_own(a.node, a.attrs.cost);
  }
  recompute(ctx);
}

void LvaNode::on_message(Context& ctx, NodeId from, const Message& m) {
  if (!own_links_.count(from)) {
    ctx.count_protocol_error();
    return;
  }
  auto& reports = reported_[from];
  for (const LinkStateRecord& r : m.records) {
    const DirectedLink l{r.head, r.tail};
    if (r.cost == kInfinity)
      reports.erase(l);
    else
      reports[l] = r;
    if (r.head == self_) continue;
    // A deletion relayed at an unseen seq carries no cost; the finite record
    // with that seq replaces it once it arrives.
    auto it = freshest_.find(l);
    if (it == freshest_.end() || it->second.seq < r.seq ||
        (it->second.seq == r.seq && it->second.cost == kInfinity && r.cost != kInfinity))
      freshest_[l] = r;
  }
  recompute(ctx);
}

void LvaNode::on_link_up(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs) {
  own_links_[neighbor] = attrs.cost;
  reported_.erase(neighbor);
  stamp_own(neighbor, attrs.cost);
  recompute(ctx, neighbor);
}

void LvaNode::on_link_down(Context& ctx, NodeId neighbor) {
  own_links_.erase(neighbor);
  reported_.erase(neighbor);
  stamp_own(neighbor, kInfinity);
  recompute(ctx);
}

void LvaNode::on_link_change(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs) {
  own_links_[neighbor] = attrs.cost;
  stamp_own(neighbor, attrs.cost);
  recompute(ctx);
}

std::vector<RouteEntry> LvaNode::table() const { return routes_; }

// ---------------------------------------------------------------------------
// LPA

LpaNode::LpaNode(NodeId self, int node_count) : self_(self), n_(node_count), dest_(node_count) {
  dest_[self].distance = 0.0;
  dest_[self].successor = self;
  dest_[self].feasible = 0.0;
  dest_[self].sent_distance = 0.0;
}

sim::MessageClass LpaNode::classify(const Message& m) {
  LpaFlag strongest = LpaFlag::Update;
  for (const LpaEntry& e : m.entries) {
    if (e.flag == LpaFlag::Query) strongest = LpaFlag::Query;
    if (e.flag == LpaFlag::Reply && strongest == LpaFlag::Update) strongest = LpaFlag::Reply;
  }
  std::string_view type = strongest == LpaFlag::Query   ? "query"
                          : strongest == LpaFlag::Reply ? "reply"
                                                        : "update";
  return {type, m.entries.size()};
}

bool LpaNode::path_avoids_self(NodeId neighbor, NodeId dest) const {
  if (dest == neighbor) return true;
  const auto& rep = reported_.at(neighbor);
  const double via = link_cost_.at(neighbor);
  NodeId x = dest;
  for (int steps = 0; steps <= n_; ++steps) {
    const NodeId p = rep[x].predecessor;
    if (p == kNoNode || p == self_) return false;
    if (p == neighbor) return true;
    // The neighbour must also offer a shortest route to every node on the
    // extracted path; otherwise the chain mixes stale and current entries.
    const double mine = dest_[p].distance;
    if (via + rep[p].distance > mine + kSumTolerance * std::max(1.0, mine)) return false;
    x = p;
  }
  return false;
}

std::optional<LpaNode::Candidate> LpaNode::best_candidate(NodeId dest) const {
  std::optional<Candidate> best;
  for (const auto& [k, cost] : link_cost_) {
    const Reported& r = reported_.at(k)[dest];
    if (r.distance == kInfinity) continue;
    const double d = cost + r.distance;
    if (best && d >= best->distance) continue;
    if (!path_avoids_self(k, dest)) continue;
    best = Candidate{k, d, r.distance, dest == k ? self_ : r.predecessor};
  }
  return best;
}

void LpaNode::announce(NodeId dest) {
  DestState& s = dest_[dest];
  if (s.distance == s.sent_distance && s.predecessor == s.sent_predecessor) return;
  s.sent_distance = s.distance;
  s.sent_predecessor = s.predecessor;
  for (const auto& [k, cost] : link_cost_)
    queue(k, LpaEntry{self_, dest, s.distance, s.predecessor, LpaFlag::Update});
}

void LpaNode::evaluate(NodeId dest) {
  DestState& s = dest_[dest];
  if (dest == self_ || s.active) return;
  const auto best = best_candidate(dest);
  if (best && best->reported < s.feasible) {
    s.distance = best->distance;
    s.successor = best->neighbor;
    s.predecessor = best->predecessor;
    s.feasible = std::min(s.feasible, s.distance);
    announce(dest);
  } else if (s.distance != kInfinity) {
    go_active(dest);
  }
}

void LpaNode::go_active(NodeId dest) {
  DestState& s = dest_[dest];
  s.active = true;
  s.distance = kInfinity;
  s.successor = kNoNode;
  s.predecessor = kNoNode;
  s.pending.clear();
  ++counters_.query_cycles;
  for (const auto& [k, cost] : link_cost_) {
    s.pending.insert(k);
    ++counters_.query_entries_originated;
    queue(k, LpaEntry{self_, dest, kInfinity, kNoNode, LpaFlag::Query});
  }
  s.sent_distance = kInfinity;
  s.sent_predecessor = kNoNode;
  if (s.pending.empty()) finish_query(dest);
}

void LpaNode::finish_query(NodeId dest) {
  DestState& s = dest_[dest];
  s.active = false;
  s.pending.clear();
  const auto best = best_candidate(dest);
  if (best) {
    s.distance = best->distance;
    s.successor = best->neighbor;
    s.predecessor = best->predecessor;
  } else {
    s.distance = kInfinity;
    s.successor = kNoNode;
    s.predecessor = kNoNode;
  }
  s.feasible = s.distance;
  announce(dest);
}

void LpaNode::queue(NodeId to, LpaEntry entry) {
  auto& box = outbox_[to];
  if (entry.flag == LpaFlag::Query) {
    std::erase_if(box, [&](const LpaEntry& e) {
      return e.destination == entry.destination && e.flag == LpaFlag::Update;
    });
    box.push_back(entry);
    return;
  }
  for (LpaEntry& e : box) {
    if (e.destination != entry.destination || e.flag == LpaFlag::Query) continue;
    const LpaFlag flag = (e.flag == LpaFlag::Reply || entry.flag == LpaFlag::Reply)
                             ? LpaFlag::Reply
                             : LpaFlag::Update;
    e = entry;
    e.flag = flag;
    return;
  }
  box.push_back(entry);
}

void LpaNode::flush(Context& ctx) {
  for (auto& [to, entries] : outbox_) {
    if (entries.empty() || !link_cost_.count(to)) continue;
    for (const LpaEntry& e : entries) {
      if (e.flag == LpaFlag::Query) ++counters_.query_entries_sent;
      if (e.flag == LpaFlag::Reply) ++counters_.replies_sent;
    }
    ctx.send(to, LpaMessage{std::move(entries)});
  }
  outbox_.clear();
}

void LpaNode::on_start(Context& ctx) {
  for (const Adjacent& a : ctx.neighbors()) {
    link_cost_[a.node] = a.attrs.cost;
    auto& rep = reported_[a.node];
    rep.assign(n_, Reported{});
    rep[a.node] = Reported{0.0, kNoNode};
  }
  for (NodeId j = 0; j < n_; ++j) evaluate(j);
  flush(ctx);
}

void LpaNode::on_message(Context& ctx, NodeId from, const Message& m) {
  if (!link_cost_.count(from)) {
    ctx.count_protocol_error();
    return;
  }
  auto& rep = reported_[from];
  std::vector<NodeId> touched;
  std::vector<NodeId> queries;
  for (const LpaEntry& e : m.entries) {
    if (e.destination < 0 || e.destination >= n_) {
      ctx.count_protocol_error();
      continue;
    }
    if (e.flag == LpaFlag::Query && e.origin != from) ++counters_.relayed_queries_received;
    rep[e.destination] = Reported{e.distance, e.predecessor};
    touched.push_back(e.destination);
    if (e.flag == LpaFlag::Query) queries.push_back(e.destination);
    if (e.flag == LpaFlag::Reply) {
      DestState& s = dest_[e.destination];
      if (s.active && s.pending.erase(from) && s.pending.empty()) finish_query(e.destination);
    }
  }
  // A changed neighbour entry can alter path extraction for other destinations.
  for (NodeId j = 0; j < n_; ++j) evaluate(j);
  for (NodeId j : queries) {
    const DestState& s = dest_[j];
    queue(from, LpaEntry{self_, j, s.distance, s.predecessor, LpaFlag::Reply});
  }
  flush(ctx);
}

void LpaNode::on_link_up(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs) {
  link_cost_[neighbor] = attrs.cost;
  auto& rep = reported_[neighbor];
  rep.assign(n_, Reported{});
  rep[neighbor] = Reported{0.0, kNoNode};
  for (NodeId j = 0; j < n_; ++j) {
    const DestState& s = dest_[j];
    if (j != self_ && s.distance != kInfinity)
      queue(neighbor, LpaEntry{self_, j, s.distance, s.predecessor, LpaFlag::Update});
  }
  for (NodeId j = 0; j < n_; ++j) evaluate(j);
  flush(ctx);
}

void LpaNode::on_link_down(Context& ctx, NodeId neighbor) {
  link_cost_.erase(neighbor);
  reported_.erase(neighbor);
  outbox_.erase(neighbor);
  for (NodeId j = 0; j < n_; ++j) {
    DestState& s = dest_[j];
    if (s.active && s.pending.erase(neighbor) && s.pending.empty()) finish_query(j);
  }
  for (NodeId j = 0; j < n_; ++j) evaluate(j);
  flush(ctx);
}

void LpaNode::on_link_change(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs) {
  link_cost_[neighbor] = attrs.cost;
  for (NodeId j = 0; j < n_; ++j) evaluate(j);
  flush(ctx);
}

std::vector<RouteEntry> LpaNode::table() const {
  std::vector<RouteEntry> out(n_);
  for (NodeId j = 0; j < n_; ++j) {
    const DestState& s = dest_[j];
    out[j] = {j, s.distance, s.successor, s.predecessor, s.feasible};
  }
  out[self_] = own_entry(self_);
  return out;
}

// ---------------------------------------------------------------------------
// Runner

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::Dbf: return "dbf";
    case Protocol::Ils: return "ils";
    case Protocol::Lpa: return "lpa";
    case Protocol::Lva: return "lva";
  }
  return "?";
}

std::optional<Protocol> parse_protocol(std::string_view text) {
  for (Protocol p : {Protocol::Dbf, Protocol::Ils, Protocol::Lpa, Protocol::Lva})
    if (to_string(p) == text) return p;
  return std::nullopt;
}

namespace {

template <class Node>
RoutingSnapshot tables(const std::vector<Node>& nodes) {
  RoutingSnapshot snap;
  snap.reserve(nodes.size());
  for (const Node& node : nodes) snap.push_back(node.table());
  return snap;
}

template <class Node, class Make>
RunResult run_nodes(const sim::ScenarioScript& script, const RunOptions& options, Make make) {
  sim::validate(script);
  const int n = script.graph.node_count();
  std::vector<Node> nodes;
  nodes.reserve(n);
  for (NodeId id = 0; id < n; ++id) nodes.push_back(make(id, n));
  sim::Simulator<Node> simulator(script.graph, std::move(nodes), script.kernel);
  std::uint64_t violations = 0;
  if (options.check_loops) {
    simulator.set_hook([&violations, n](const sim::Simulator<Node>& s) {
      const RoutingSnapshot snap = tables(s.nodes());
      for (NodeId d = 0; d < n; ++d)
        if (!check_loop_freedom(snap, d).acyclic) ++violations;
    });
  }
  simulator.run(script.events);
  RunResult result;
  result.metrics = simulator.metrics();
  result.metrics.loop_violations = violations;
  result.routes = tables(simulator.nodes());
  result.final_topology = simulator.live_topology();
  if constexpr (std::is_same_v<Node, LpaNode>) {
    for (const LpaNode& node : simulator.nodes()) {
      result.lpa_query_cycles += node.counters().query_cycles;
      result.lpa_query_entries_forwarded += node.counters().relayed_queries_received;
    }
  }
  return result;
}

}  // namespace

RunResult run(const sim::ScenarioScript& script, Protocol protocol, const RunOptions& options) {
  switch (protocol) {
    case Protocol::Dbf: {
      const double cap = script.param("dbf.infinity", options.dbf_infinity);
      return run_nodes<DbfNode>(script, options,
                                [cap](NodeId id, int n) { return DbfNode(id, n, cap); });
    }
    case Protocol::Ils:
      return run_nodes<IlsNode>(script, options, [](NodeId id, int n) { return IlsNode(id, n); });
    case Protocol::Lpa:
      return run_nodes<LpaNode>(script, options, [](NodeId id, int n) { return LpaNode(id, n); });
    case Protocol::Lva:
      return run_nodes<LvaNode>(script, options, [](NodeId id, int n) { return LvaNode(id, n); });
  }
  throw sim::SimError("unknown protocol");
}

std::string_view to_string(ChangeKind kind) {
  switch (kind) {
    case ChangeKind::LinkFailure: return "link-failure";
    case ChangeKind::LinkAddition: return "link-addition";
    case ChangeKind::CostChange: return "cost-change";
    case ChangeKind::MultiCostChange: return "multi-cost-change";
  }
  return "?";
}

sim::ScenarioScript suite_scenario(const WaxmanParams& params, ChangeKind kind) {
  sim::ScenarioScript script;
  script.graph = waxman_connected(params);
  script.seed = params.seed;
  const auto edges = script.graph.edges();
  std::mt19937_64 rng(params.seed * 4 + static_cast<std::uint64_t>(kind));
  auto pick = [&rng](std::size_t size) {
    return static_cast<std::size_t>(std::uniform_int_distribution<std::size_t>(0, size - 1)(rng));
  };
  auto new_cost = [&rng] { return std::uniform_real_distribution<double>(1.0, 10.0)(rng); };
  switch (kind) {
    case ChangeKind::LinkFailure: {
      const Edge& e = edges.at(pick(edges.size()));
      script.events.push_back({0.0, sim::EventKind::LinkDown, e.u, e.v, e.attrs});
      break;
    }
    case ChangeKind::LinkAddition: {
      std::vector<EdgeKey> absent;
      for (NodeId u = 0; u < params.n; ++u)
        for (NodeId v = u + 1; v < params.n; ++v)
          if (!script.graph.has_edge(u, v)) absent.emplace_back(u, v);
      if (absent.empty()) break;
      const auto [u, v] = absent[pick(absent.size())];
      const auto pts = waxman_positions(params.n, params.seed);
      const double w = waxman_edge_weight(std::hypot(pts[u].x - pts[v].x, pts[u].y - pts[v].y));
      script.events.push_back({0.0, sim::EventKind::LinkUp, u, v, EdgeAttrs{w, w, params.capacity}});
      break;
    }
    case ChangeKind::CostChange:
    case ChangeKind::MultiCostChange: {
      const std::size_t count = kind == ChangeKind::CostChange ? 1 : std::min<std::size_t>(5, edges.size());
      std::vector<std::size_t> order(edges.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
      for (std::size_t i = 0; i < count; ++i) {
        const Edge& e = edges[order[i]];
        EdgeAttrs attrs = e.attrs;
        attrs.cost = new_cost();
        script.events.push_back({0.0, sim::EventKind::LinkCostChange, e.u, e.v, attrs});
      }
      break;
    }
  }
  return script;
}

RoutingSnapshot oracle_routes(const NetworkGraph& graph) {
  const int n = graph.node_count();
  RoutingSnapshot out(n);
  for (NodeId s = 0; s < n; ++s) {
    const NodeId src[] = {s};
    const detail::SearchResult r = detail::dijkstra(graph, src, Metric::Cost);
    DirectedSpt spt{r.dist, r.parent};
    out[s] = routes_from_spt(s, spt);
  }
  return out;
}

}  // namespace netlab::unicast
