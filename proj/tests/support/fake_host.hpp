#pragma once

#include <vector>

#include "netlab/sim.hpp"

namespace netlab::testing {

/// Drives a single protocol node without a simulator; captures its sends.
template <class Message>
class FakeHost final : public sim::ContextHost<Message> {
 public:
  struct Sent {
    NodeId from;
    NodeId to;
    Message message;
  };

  FakeHost(int node_count, std::vector<std::vector<Adjacent>> adjacency)
      : n_(node_count), adjacency_(std::move(adjacency)) {}

  sim::Context<Message> context(NodeId self) { return sim::Context<Message>(*this, self); }

  double host_now() const override { return 0.0; }
  int host_node_count() const override { return n_; }
  std::span<const Adjacent> host_neighbors(NodeId node) const override { return adjacency_[node]; }
  void host_send(NodeId from, NodeId to, Message message) override {
    sent.push_back({from, to, std::move(message)});
  }
  void host_timer(NodeId, double, std::uint64_t) override {}
  void host_protocol_error() override { ++protocol_errors; }

  std::vector<Sent> sent;
  int protocol_errors = 0;

 private:
  int n_;
  std::vector<std::vector<Adjacent>> adjacency_;
};

}  // namespace netlab::testing
