#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "netlab/graph.hpp"
#include "netlab/sim.hpp"

namespace netlab::broadcast {

enum class Protocol { Pi, Pif, Rbp };

std::string_view to_string(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view text);

struct BroadcastId {
  NodeId source = kNoNode;
  std::uint64_t counter = 0;

  friend auto operator<=>(const BroadcastId&, const BroadcastId&) = default;
};

struct BroadcastMessage {
  enum class Type { Payload, Feedback, Ack } type = Type::Payload;
  BroadcastId id;
};

/// Per-node counters shared by the three protocols.
struct NodeCounters {
  std::uint64_t payloads_received = 0;
  std::uint64_t duplicates_received = 0;
  std::uint64_t duplicate_forwards = 0;  // re-forwarding of an already handled payload
  std::uint64_t repeat_sends = 0;        // second payload over one link incarnation
};

class NodeBase {
 public:
  using Message = BroadcastMessage;
  using Context = sim::Context<Message>;

  NodeBase(NodeId self, BroadcastId id) : self_(self), id_(id) {}

  static sim::MessageClass classify(const Message& m);

  bool received() const { return received_; }
  bool completed() const { return completed_at_.has_value(); }
  std::optional<double> completed_at() const { return completed_at_; }
  const NodeCounters& counters() const { return counters_; }

 protected:
  bool is_source() const { return self_ == id_.source; }
  void send_payload(Context& ctx, NodeId to);
  void forget_link(NodeId neighbor) { sent_on_link_.erase(neighbor); }
  void complete(Context& ctx) {
    if (!completed_at_) completed_at_ = ctx.now();
  }
  bool foreign(Context& ctx, const Message& m);
  // Marks whether the message being handled is a repeated payload, so that
  // any payload sent while handling it counts as a duplicate forward.
  void begin(const Message& m) {
    handling_duplicate_ = received_ && m.type == Message::Type::Payload;
  }
  void begin() { handling_duplicate_ = false; }

  NodeId self_;
  BroadcastId id_;
  bool received_ = false;
  std::optional<double> completed_at_;
  NodeCounters counters_;

 private:
  std::set<NodeId> sent_on_link_;
  bool handling_duplicate_ = false;
};

/// Plain flooding: forward to every neighbour on first receipt.
class PiNode : public NodeBase {
 public:
  using NodeBase::NodeBase;

  void on_start(Context& ctx);
  void on_message(Context& ctx, NodeId from, const Message& m);
  void on_link_up(Context&, NodeId, const EdgeAttrs&) {}
  void on_link_down(Context&, NodeId neighbor) { forget_link(neighbor); }
  void on_link_change(Context&, NodeId, const EdgeAttrs&) {}
};

/// Flooding with feedback to the first sender once every neighbour has been heard.
class PifNode : public NodeBase {
 public:
  using NodeBase::NodeBase;

  void on_start(Context& ctx);
  void on_message(Context& ctx, NodeId from, const Message& m);
  void on_link_up(Context&, NodeId, const EdgeAttrs&) {}
  void on_link_down(Context&, NodeId neighbor) { forget_link(neighbor); }
  void on_link_change(Context&, NodeId, const EdgeAttrs&) {}

  NodeId successor() const { return successor_; }

 private:
  void check_done(Context& ctx);

  NodeId successor_ = kNoNode;
  std::set<NodeId> expected_;
  std::set<NodeId> heard_;
  bool fed_back_ = false;
};

/**
 * Reliable broadcast. Every payload copy sent opens one unit of deficit
 * towards its receiver. A copy is answered either by an acknowledgment or by
 * a copy travelling the other way over the same link. The first copy a node
 * receives makes its sender a successor; successors are acknowledged once
 * the node's own deficit is zero. Link failures retire the deficit and the
 * successor entry of the lost neighbour; new links get a copy.
 */
class RbpNode : public NodeBase {
 public:
  using NodeBase::NodeBase;

  void on_start(Context& ctx);
  void on_message(Context& ctx, NodeId from, const Message& m);
  void on_link_up(Context& ctx, NodeId neighbor, const EdgeAttrs& attrs);
  void on_link_down(Context& ctx, NodeId neighbor);
  void on_link_change(Context&, NodeId, const EdgeAttrs&) {}

  int deficit() const;
  const std::set<NodeId>& successors() const { return successors_; }

 private:
  void send_copy(Context& ctx, NodeId to);
  void settle(Context& ctx);

  std::map<NodeId, int> outstanding_;  // unanswered copies per neighbour
  std::set<NodeId> successors_;
};

struct BroadcastOutcome {
  Protocol protocol = Protocol::Pi;
  std::set<NodeId> reached;
  bool source_notified = false;
  std::optional<double> completion_time;
  std::set<NodeId> final_component;  // source's component in the final topology
  bool topology_changed = false;     // an event fired before completion (PIF is unreliable then)
  bool stalled = false;              // quiescent with the source never notified (PI excluded)
  std::uint64_t duplicate_forwards = 0;
  std::uint64_t source_repeat_sends = 0;
  std::uint64_t repeat_sends = 0;
  sim::MetricsLog metrics;
};

/**
 * One broadcast from `source` starting at time 0. Events carry absolute
 * times. Messages take one time unit per link.
 */
BroadcastOutcome run_broadcast(const NetworkGraph& graph, NodeId source, Protocol protocol,
                               std::span<const sim::TopologyEvent> events = {});

struct BroadcastScenario {
  NetworkGraph graph;
  NodeId source = kNoNode;
  std::vector<sim::TopologyEvent> events;
};

/// Connected Waxman graph with `failures` link failures and `additions` new
/// links at random times in [0, window) after the broadcast starts.
BroadcastScenario random_broadcast_scenario(const WaxmanParams& params, int failures, int additions,
                                            double window = 6.0);

}  // namespace netlab::broadcast
