#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "netlab/graph.hpp"

namespace netlab::sim {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EventKind {
  MessageDelivery,
  LinkUp,
  LinkDown,
  LinkCostChange,
  NodeUp,
  NodeDown,
  Timer,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

/// An injected topology change. Link events use (u, v); node events use u.
/// LinkUp on a pair with no edge adds the link with `attrs`; LinkCostChange
/// replaces the cost only.
struct TopologyEvent {
  double time = 0.0;
  EventKind kind = EventKind::LinkDown;
  NodeId u = kNoNode;
  NodeId v = kNoNode;
  EdgeAttrs attrs;

  friend bool operator==(const TopologyEvent&, const TopologyEvent&) = default;
};

/// Min-queue over (time, sequence). Sequence numbers are unique and increase
/// with every push, so equal-time events pop in insertion order.
template <class Payload>
class EventQueue {
 public:
  struct Entry {
    double time;
    std::uint64_t seq;
    Payload payload;
  };

  std::uint64_t push(double time, Payload payload) {
    const std::uint64_t seq = next_seq_++;
    heap_.push(Entry{time, seq, std::move(payload)});
    return seq;
  }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  const Entry& top() const { return heap_.top(); }
  Entry pop() {
    Entry e = std::move(const_cast<Entry&>(heap_.top()));
    heap_.pop();
    return e;
  }

 private:
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

struct MetricsLog {
  std::map<std::string, std::uint64_t> messages_by_type;
  std::map<std::string, std::uint64_t> entries_by_type;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_delivered = 0;
  std::uint64_t messages_dropped = 0;
  std::uint64_t events_processed = 0;
  std::uint64_t loop_violations = 0;
  std::uint64_t protocol_errors = 0;
  bool quiescent = false;
  std::optional<double> convergence_time;  // set only when quiescent
  double start_time = 0.0;                 // counting starts here (end of warm-up)
  double end_time = 0.0;
  std::uint64_t warmup_messages = 0;
  double warmup_time = 0.0;
  // Packet-level counters (multipath forwarding).
  std::uint64_t packets_admitted = 0;
  std::uint64_t packets_rejected = 0;
  std::uint64_t packets_delivered = 0;
  std::uint64_t packets_dropped = 0;
  std::vector<double> packet_latencies;

  std::uint64_t total_entries() const;
  friend bool operator==(const MetricsLog&, const MetricsLog&) = default;
};

struct KernelConfig {
  /// Latency of every message; nullopt means "use the link's delay attribute".
  std::optional<double> fixed_link_delay = 1.0;
  double horizon = 1e9;
  /// Boot and run to quiescence before injected events; event times are then
  /// offsets from the end of warm-up and counters cover only the post-warm-up phase.
  bool warmup = true;
};

/**
 * Protocol-agnostic scenario: initial topology, injected events, protocol
 * name and flat numeric parameters ("dbf.infinity", "multipath.beta", ...).
 */
struct ScenarioScript {
  NetworkGraph graph;
  std::vector<TopologyEvent> events;
  std::string protocol;
  std::map<std::string, double> params;
  std::uint64_t seed = 1;
  KernelConfig kernel;

  double param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

/// Throws SimError on decreasing event times or unknown node ids.
void validate(const ScenarioScript& script);

struct MessageClass {
  std::string_view type;
  std::size_t entries = 1;
};

/// Services the kernel exposes to a protocol handler running at one node.
template <class Message>
class ContextHost {
 public:
  virtual double host_now() const = 0;
  virtual int host_node_count() const = 0;
  virtual std::span<const Adjacent> host_neighbors(NodeId node) const = 0;
  virtual void host_send(NodeId from, NodeId to, Message message) = 0;
  virtual void host_timer(NodeId node, double delay, std::uint64_t tag) = 0;
  virtual void host_protocol_error() = 0;

 protected:
  ~ContextHost() = default;
};

template <class Message>
class Context {
 public:
  Context(ContextHost<Message>& host, NodeId self) : host_(&host), self_(self) {}

  NodeId self() const { return self_; }
  double now() const { return host_->host_now(); }
  int node_count() const { return host_->host_node_count(); }
  /// Operational adjacent links, sorted by neighbour id.
  std::span<const Adjacent> neighbors() const { return host_->host_neighbors(self_); }
  std::optional<EdgeAttrs> link(NodeId neighbor) const {
    for (const auto& a : neighbors())
      if (a.node == neighbor) return a.attrs;
    return std::nullopt;
  }
  void send(NodeId to, Message message) { host_->host_send(self_, to, std::move(message)); }
  void schedule_timer(double delay, std::uint64_t tag) { host_->host_timer(self_, delay, tag); }
  void count_protocol_error() { host_->host_protocol_error(); }

 private:
  ContextHost<Message>* host_;
  NodeId self_;
};

/**
 * Discrete-event engine for one protocol. `Node` must provide:
 *
 *   using Message = ...;
 *   static MessageClass classify(const Message&);
 *   void on_start(Context&);
 *   void on_message(Context&, NodeId from, const Message&);
 *   void on_link_up(Context&, NodeId neighbor, const EdgeAttrs&);
 *   void on_link_down(Context&, NodeId neighbor);
 *   void on_link_change(Context&, NodeId neighbor, const EdgeAttrs&);
 *
 * and may provide `void on_timer(Context&, std::uint64_t tag)`.
 * Node failure is the simultaneous failure of every incident link. Node
 * processing takes no simulated time; messages arrive after the link latency
 * and are dropped if the link fails (or flaps) while they are in flight.
 */
template <class Node>
class Simulator final : private ContextHost<typename Node::Message> {
 public:
  using Message = typename Node::Message;
  using Hook = std::function<void(const Simulator&)>;

  using Context = sim::Context<Message>;

  Simulator(NetworkGraph graph, std::vector<Node> nodes, KernelConfig config = {})
      : topology_(std::move(graph)), nodes_(std::move(nodes)), config_(config) {
    if (static_cast<int>(nodes_.size()) != topology_.node_count())
      throw SimError("one protocol node per graph node required");
    node_up_.assign(topology_.node_count(), true);
    for (const Edge& e : topology_.edges()) link_state_[{e.u, e.v}] = LinkState{true, 0};
    rebuild_live();
  }

  void set_hook(Hook hook) { hook_ = std::move(hook); }

  double now() const { return now_; }
  const MetricsLog& metrics() const { return metrics_; }
  MetricsLog& metrics() { return metrics_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  bool idle() const { return queue_.empty(); }

  /// Deep copy of every node's protocol state.
  std::vector<Node> snapshot() const { return nodes_; }

  /// Currently operational links with their current attributes.
  NetworkGraph live_topology() const {
    NetworkGraph g(topology_.node_count());
    for (NodeId u = 0; u < topology_.node_count(); ++u)
      for (const auto& a : live_[u])
        if (u < a.node) g.add_edge(u, a.node, a.attrs);
    return g;
  }

  /// Boots every node (in id order) at the current time.
  void start() {
    for (NodeId id = 0; id < static_cast<NodeId>(nodes_.size()); ++id) {
      Context ctx(*this, id);
      nodes_[id].on_start(ctx);
    }
  }

  void inject(const TopologyEvent& event) {
    if (event.time < now_) throw SimError("event time earlier than simulation clock");
    if (!topology_.has_node(event.u)) throw SimError("event references unknown node");
    const bool link_event = event.kind == EventKind::LinkUp || event.kind == EventKind::LinkDown ||
                            event.kind == EventKind::LinkCostChange;
    if (link_event && (!topology_.has_node(event.v) || event.u == event.v))
      throw SimError("link event references invalid node pair");
    queue_.push(event.time, event);
  }

  /// Processes one event; returns false when the queue is empty or the next
  /// event lies beyond the horizon.
  bool step() {
    if (queue_.empty() || queue_.top().time > config_.horizon) return false;
    auto entry = queue_.pop();
    now_ = entry.time;
    std::visit([this](auto& payload) { dispatch(payload); }, entry.payload);
    ++metrics_.events_processed;
    last_event_time_ = now_;
    if (hook_) hook_(*this);
    return true;
  }

  /// Runs until quiescence or the horizon; records quiescence and convergence time.
  void run_until_quiescent() {
    while (step()) {
    }
    metrics_.quiescent = queue_.empty();
    metrics_.end_time = now_;
    if (metrics_.quiescent)
      metrics_.convergence_time = std::max(0.0, last_event_time_ - metrics_.start_time);
    else
      metrics_.convergence_time.reset();
  }

  /// Boot, optional warm-up, injected events, then run to quiescence.
  void run(std::span<const TopologyEvent> events) {
    start();
    double offset = 0.0;
    if (config_.warmup) {
      run_until_quiescent();
      const MetricsLog warm = metrics_;
      metrics_ = MetricsLog{};
      metrics_.warmup_messages = warm.messages_sent;
      metrics_.warmup_time = warm.convergence_time.value_or(now_);
      metrics_.start_time = now_;
      last_event_time_ = now_;
      offset = now_;
      if (!warm.quiescent) {
        metrics_.end_time = now_;
        return;
      }
    }
    for (TopologyEvent e : events) {
      e.time += offset;
      inject(e);
    }
    run_until_quiescent();
  }

 private:
  double host_now() const override { return now_; }
  int host_node_count() const override { return topology_.node_count(); }
  std::span<const Adjacent> host_neighbors(NodeId node) const override { return live_[node]; }
  void host_send(NodeId from, NodeId to, Message message) override {
    send(from, to, std::move(message));
  }
  void host_timer(NodeId node, double delay, std::uint64_t tag) override {
    queue_.push(now_ + delay, TimerFire{node, tag});
  }
  void host_protocol_error() override { ++metrics_.protocol_errors; }

  struct Delivery {
    NodeId from;
    NodeId to;
    std::uint64_t epoch;
    Message message;
  };
  struct TimerFire {
    NodeId node;
    std::uint64_t tag;
  };
  struct LinkState {
    bool up = true;
    std::uint64_t epoch = 0;
  };
  using Payload = std::variant<Delivery, TopologyEvent, TimerFire>;


  bool operational(NodeId u, NodeId v) const {
    auto it = link_state_.find(edge_key(u, v));
    return it != link_state_.end() && it->second.up && node_up_[u] && node_up_[v];
  }

  void rebuild_live() {
    live_.assign(topology_.node_count(), {});
    for (NodeId u = 0; u < topology_.node_count(); ++u)
      for (const auto& a : topology_.neighbors(u))
        if (operational(u, a.node)) live_[u].push_back(a);
  }

  void send(NodeId from, NodeId to, Message message) {
    const MessageClass cls = Node::classify(message);
    ++metrics_.messages_sent;
    ++metrics_.messages_by_type[std::string(cls.type)];
    metrics_.entries_by_type[std::string(cls.type)] += cls.entries;
    if (!operational(from, to)) {
      ++metrics_.messages_dropped;
      return;
    }
    const EdgeAttrs& attrs = topology_.attrs(from, to);
    const double latency = config_.fixed_link_delay.value_or(attrs.delay);
    double& last = fifo_[{from, to}];
    const double at = std::max(now_ + latency, last);
    last = at;
    queue_.push(at, Delivery{from, to, link_state_[edge_key(from, to)].epoch, std::move(message)});
  }

  void dispatch(Delivery& d) {
    auto it = link_state_.find(edge_key(d.from, d.to));
    if (!operational(d.from, d.to) || it->second.epoch != d.epoch) {
      ++metrics_.messages_dropped;
      return;
    }
    ++metrics_.messages_delivered;
    Context ctx(*this, d.to);
    nodes_[d.to].on_message(ctx, d.from, d.message);
  }

  void dispatch(TimerFire& t) {
    if constexpr (requires(Node n, Context c) { n.on_timer(c, std::uint64_t{}); }) {
      if (!node_up_[t.node]) return;
      Context ctx(*this, t.node);
      nodes_[t.node].on_timer(ctx, t.tag);
    }
  }

  void notify(NodeId at, NodeId neighbor, bool up) {
    if (!node_up_[at]) return;
    Context ctx(*this, at);
    if (up)
      nodes_[at].on_link_up(ctx, neighbor, topology_.attrs(at, neighbor));
    else
      nodes_[at].on_link_down(ctx, neighbor);
  }

  void dispatch(TopologyEvent& e) {
    if (e.kind == EventKind::MessageDelivery || e.kind == EventKind::Timer)
      throw SimError("message and timer events cannot be injected");
    if (e.kind == EventKind::LinkCostChange) {
      auto current = topology_.edge(e.u, e.v);
      if (!current) throw SimError("cost change on unknown link");
      if (current->cost == e.attrs.cost) return;
      EdgeAttrs next = *current;
      next.cost = e.attrs.cost;
      topology_.set_attrs(e.u, e.v, next);
      rebuild_live();
      if (!operational(e.u, e.v)) return;
      for (auto [a, b] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
        Context ctx(*this, a);
        nodes_[a].on_link_change(ctx, b, next);
      }
      return;
    }

    std::vector<EdgeKey> pairs;
    if (e.kind == EventKind::NodeUp || e.kind == EventKind::NodeDown) {
      for (const auto& a : topology_.neighbors(e.u)) pairs.push_back(edge_key(e.u, a.node));
    } else {
      pairs.push_back(edge_key(e.u, e.v));
    }
    std::vector<bool> before;
    for (const EdgeKey& k : pairs) before.push_back(operational(k.first, k.second));

    switch (e.kind) {
      case EventKind::LinkUp:
        if (!topology_.has_edge(e.u, e.v)) {
          topology_.add_edge(e.u, e.v, e.attrs);
          link_state_[pairs[0]] = LinkState{};
        }
        link_state_[pairs[0]].up = true;
        break;
      case EventKind::LinkDown: {
        auto it = link_state_.find(pairs[0]);
        if (it == link_state_.end()) return;
        it->second.up = false;
        break;
      }
      case EventKind::NodeUp:
        node_up_[e.u] = true;
        break;
      case EventKind::NodeDown:
        node_up_[e.u] = false;
        break;
      default:
        break;
    }
    rebuild_live();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto [a, b] = pairs[i];
      const bool after = operational(a, b);
      if (before[i] == after) continue;
      if (!after) ++link_state_[pairs[i]].epoch;
      notify(a, b, after);
      notify(b, a, after);
    }
  }

  NetworkGraph topology_;
  std::vector<Node> nodes_;
  KernelConfig config_;
  std::vector<bool> node_up_;
  std::map<EdgeKey, LinkState> link_state_;
  std::vector<std::vector<Adjacent>> live_;
  std::map<std::pair<NodeId, NodeId>, double> fifo_;
  EventQueue<Payload> queue_;
  MetricsLog metrics_;
  Hook hook_;
  double now_ = 0.0;
  double last_event_time_ = 0.0;
};

}  // namespace netlab::sim
