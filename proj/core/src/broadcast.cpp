#include "netlab/broadcast.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace netlab::broadcast {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::Pi:
      return "pi";
    case Protocol::Pif:
      return "pif";
    case Protocol::Rbp:
      return "rbp";
  }
  return "?";
}

std::optional<Protocol> parse_protocol(std::string_view text) {
  for (Protocol p : {Protocol::Pi, Protocol::Pif, Protocol::Rbp})
    if (text == to_string(p)) return p;
  return std::nullopt;
}

sim::MessageClass NodeBase::classify(const Message& m) {
  switch (m.type) {
    case Message::Type::Payload:
      return {"payload"};
    case Message::Type::Feedback:
      return {"feedback"};
    case Message::Type::Ack:
      return {"ack"};
  }
  return {"?"};
}

void NodeBase::send_payload(Context& ctx, NodeId to) {
  if (!sent_on_link_.insert(to).second) ++counters_.repeat_sends;
  if (handling_duplicate_) ++counters_.duplicate_forwards;
  ctx.send(to, {Message::Type::Payload, id_});
}

bool NodeBase::foreign(Context& ctx, const Message& m) {
  if (m.id == id_) return false;
  ctx.count_protocol_error();
  return true;
}

// ---------------------------------------------------------------------------
// PI

void PiNode::on_start(Context& ctx) {
  if (!is_source()) return;
  received_ = true;
  for (const Adjacent& a : ctx.neighbors()) send_payload(ctx, a.node);
}

void PiNode::on_message(Context& ctx, NodeId, const Message& m) {
  if (foreign(ctx, m)) return;
  begin(m);
  if (m.type != Message::Type::Payload) {
    ctx.count_protocol_error();
    return;
  }
  ++counters_.payloads_received;
  if (received_) {
    ++counters_.duplicates_received;
    return;
  }
  received_ = true;
  for (const Adjacent& a : ctx.neighbors()) send_payload(ctx, a.node);
}

// ---------------------------------------------------------------------------
// PIF

void PifNode::on_start(Context& ctx) {
  if (!is_source()) return;
  received_ = true;
  for (const Adjacent& a : ctx.neighbors()) {
    expected_.insert(a.node);
    send_payload(ctx, a.node);
  }
  check_done(ctx);
}

void PifNode::on_message(Context& ctx, NodeId from, const Message& m) {
  if (foreign(ctx, m)) return;
  begin(m);
  if (m.type == Message::Type::Ack) {
    ctx.count_protocol_error();
    return;
  }
  ++counters_.payloads_received;
  heard_.insert(from);
  if (!received_) {
    received_ = true;
    successor_ = from;
    for (const Adjacent& a : ctx.neighbors()) {
      expected_.insert(a.node);
      if (a.node != from) send_payload(ctx, a.node);
    }
  } else {
    ++counters_.duplicates_received;
  }
  check_done(ctx);
}

void PifNode::check_done(Context& ctx) {
  if (fed_back_ || !std::ranges::includes(heard_, expected_)) return;
  fed_back_ = true;
  if (!is_source()) ctx.send(successor_, {Message::Type::Feedback, id_});
  complete(ctx);
}

// ---------------------------------------------------------------------------
// RBP

int RbpNode::deficit() const {
  int total = 0;
  for (const auto& [n, count] : outstanding_) total += count;
  return total;
}

void RbpNode::send_copy(Context& ctx, NodeId to) {
  send_payload(ctx, to);
  ++outstanding_[to];
}

void RbpNode::on_start(Context& ctx) {
  if (!is_source()) return;
  received_ = true;
  for (const Adjacent& a : ctx.neighbors()) send_copy(ctx, a.node);
  settle(ctx);
}

void RbpNode::on_message(Context& ctx, NodeId from, const Message& m) {
  if (foreign(ctx, m)) return;
  begin(m);
  switch (m.type) {
    case Message::Type::Payload:
      ++counters_.payloads_received;
      if (!received_) {
        received_ = true;
        successors_.insert(from);
        for (const Adjacent& a : ctx.neighbors())
          if (a.node != from) send_copy(ctx, a.node);
      } else {
        ++counters_.duplicates_received;
        if (auto it = outstanding_.find(from); it != outstanding_.end() && it->second > 0)
          --it->second;
        else
          ctx.send(from, {Message::Type::Ack, id_});
      }
      break;
    case Message::Type::Ack:
      if (auto it = outstanding_.find(from); it != outstanding_.end() && it->second > 0)
        --it->second;
      else
        ctx.count_protocol_error();
      break;
    case Message::Type::Feedback:
      ctx.count_protocol_error();
      return;
  }
  settle(ctx);
}

void RbpNode::on_link_up(Context& ctx, NodeId neighbor, const EdgeAttrs&) {
  begin();
  if (received_) send_copy(ctx, neighbor);
}

void RbpNode::on_link_down(Context& ctx, NodeId neighbor) {
  forget_link(neighbor);
  outstanding_.erase(neighbor);
  successors_.erase(neighbor);
  settle(ctx);
}

void RbpNode::settle(Context& ctx) {
  if (!received_ || deficit() > 0) return;
  for (NodeId s : successors_) ctx.send(s, {Message::Type::Ack, id_});
  successors_.clear();
  complete(ctx);
}

// ---------------------------------------------------------------------------
// Runner

namespace {

template <class Node>
BroadcastOutcome run_with(const NetworkGraph& graph, NodeId source, Protocol protocol,
                          std::span<const sim::TopologyEvent> events) {
  if (!graph.has_node(source)) throw GraphError("source not in graph");
  const BroadcastId id{source, 1};
  std::vector<Node> nodes;
  nodes.reserve(graph.node_count());
  for (NodeId v = 0; v < graph.node_count(); ++v) nodes.emplace_back(v, id);
  sim::KernelConfig config;
  config.warmup = false;
  sim::Simulator<Node> simulator(graph, std::move(nodes), config);
  simulator.run(events);

  BroadcastOutcome out;
  out.protocol = protocol;
  out.metrics = simulator.metrics();
  for (NodeId v = 0; v < graph.node_count(); ++v) {
    const Node& n = simulator.node(v);
    if (n.received()) out.reached.insert(v);
    out.duplicate_forwards += n.counters().duplicate_forwards;
    out.repeat_sends += n.counters().repeat_sends;
  }
  out.source_repeat_sends = simulator.node(source).counters().repeat_sends;
  if (protocol != Protocol::Pi) {
    out.completion_time = simulator.node(source).completed_at();
    out.source_notified = out.completion_time.has_value();
    out.stalled = out.metrics.quiescent && !out.source_notified;
  }
  const std::vector<NodeId> labels = simulator.live_topology().components();
  for (NodeId v = 0; v < graph.node_count(); ++v)
    if (labels[v] == labels[source]) out.final_component.insert(v);
  for (const sim::TopologyEvent& e : events)
    if (!out.completion_time || e.time < *out.completion_time) out.topology_changed = true;
  return out;
}

}  // namespace

BroadcastOutcome run_broadcast(const NetworkGraph& graph, NodeId source, Protocol protocol,
                               std::span<const sim::TopologyEvent> events) {
  switch (protocol) {
    case Protocol::Pi:
      return run_with<PiNode>(graph, source, protocol, events);
    case Protocol::Pif:
      return run_with<PifNode>(graph, source, protocol, events);
    case Protocol::Rbp:
      return run_with<RbpNode>(graph, source, protocol, events);
  }
  throw std::invalid_argument("unknown broadcast protocol");
}

BroadcastScenario random_broadcast_scenario(const WaxmanParams& params, int failures, int additions,
                                            double window) {
  BroadcastScenario s;
  s.graph = waxman_connected(params);
  std::mt19937_64 rng(params.seed);
  const int n = s.graph.node_count();
  s.source = std::uniform_int_distribution<NodeId>(0, n - 1)(rng);
  std::uniform_real_distribution<double> when(0.0, window);

  std::vector<Edge> edges = s.graph.edges();
  std::shuffle(edges.begin(), edges.end(), rng);
  for (int i = 0; i < failures && i < static_cast<int>(edges.size()); ++i)
    s.events.push_back({when(rng), sim::EventKind::LinkDown, edges[i].u, edges[i].v, {}});

  std::vector<EdgeKey> absent;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (!s.graph.has_edge(u, v)) absent.emplace_back(u, v);
  std::shuffle(absent.begin(), absent.end(), rng);
  const std::vector<Point> pos = waxman_positions(n, params.seed);
  for (int i = 0; i < additions && i < static_cast<int>(absent.size()); ++i) {
    const auto [u, v] = absent[i];
    const double w = waxman_edge_weight(std::hypot(pos[u].x - pos[v].x, pos[u].y - pos[v].y));
    s.events.push_back({when(rng), sim::EventKind::LinkUp, u, v, {w, w, params.capacity}});
  }
  std::ranges::stable_sort(s.events, {}, &sim::TopologyEvent::time);
  return s;
}

}  // namespace netlab::broadcast
