#include "netlab/multipath.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <variant>

#include "netlab/unicast.hpp"

namespace netlab::multipath {

double compute_delay_bound(const DelayBoundInputs& in) {
  for (double x : {in.delta, in.queue_backlog_delay, in.mad})
    if (!std::isfinite(x) || x < 0.0) throw std::invalid_argument("delay bound inputs must be finite and nonnegative");
  return in.delta * (1.0 + in.queue_backlog_delay) + in.mad;
}

double MultipathEntry::delta() const {
  double d = 0.0;
  for (const NextHop& h : next_hops) d = std::max(d, h.link_delay);
  return d;
}

MultipathEntry update_mad(const NetworkGraph& live, NodeId self, NodeId destination,
                          const std::vector<double>& distance, const std::vector<double>& worst,
                          const MultipathConfig& config) {
  MultipathEntry entry;
  entry.destination = destination;
  const double own = distance.at(self);
  if (self == destination || own == kInfinity) return entry;
  const double mad = config.beta * own;
  entry.mad = mad;
  for (const Adjacent& a : live.neighbors(self)) {
    const double theirs = distance.at(a.node);
    if (!(theirs < own)) continue;
    const double path = a.attrs.delay + config.transmission_time + worst.at(a.node);
    if (path > mad + kSumTolerance * std::max(1.0, mad)) continue;
    entry.next_hops.push_back({a.node, a.attrs.delay, path});
  }
  return entry;
}

double MultipathEntry::worst_path_delay() const {
  double w = 0.0;
  for (const NextHop& h : next_hops) w = std::max(w, h.path_delay);
  return w;
}

std::vector<MultipathEntry> multipath_entries(const NetworkGraph& live, NodeId destination,
                                              const std::vector<double>& distance,
                                              const MultipathConfig& config) {
  const int n = live.node_count();
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return distance.at(a) < distance.at(b); });
  std::vector<MultipathEntry> entries(n);
  std::vector<double> worst(n, kInfinity);
  worst.at(destination) = 0.0;
  for (NodeId v : order) {
    entries[v] = update_mad(live, v, destination, distance, worst, config);
    if (v != destination && !entries[v].next_hops.empty()) worst[v] = entries[v].worst_path_delay();
  }
  return entries;
}

Admission admit(const MultipathEntry& entry, CreditState& credits) {
  if (entry.next_hops.empty() || credits.available < 1) return Admission::Rejected;
  --credits.available;
  return Admission::Accepted;
}

ForwardDecision forward(const MultipathEntry& entry,
                        const std::function<std::optional<int>(NodeId)>& backlog) {
  if (entry.next_hops.empty()) return {ForwardDecision::Kind::Drop, kNoNode};
  std::optional<int> best_queue;
  NodeId best = kNoNode;
  for (const NextHop& h : entry.next_hops) {
    const std::optional<int> q = backlog(h.neighbor);
    if (!q) continue;
    if (!best_queue || *q < *best_queue) {
      best_queue = q;
      best = h.neighbor;
    }
  }
  if (best == kNoNode) return {ForwardDecision::Kind::Wait, kNoNode};
  return {ForwardDecision::Kind::Send, best};
}

namespace {

struct Hop {
  NodeId node;
  double arrival;
  std::optional<double> bound;
};

struct Packet {
  NodeId destination;
  double created;
  std::vector<Hop> hops;
  bool looped = false;
};

struct Generate {
  std::size_t flow;
};
struct TxDone {
  NodeId node;
  std::size_t packet;
  NodeId next;
  std::uint64_t epoch;
};
struct Arrive {
  NodeId node;
  NodeId from;
  std::size_t packet;
  std::uint64_t epoch;
};
struct Change {
  sim::TopologyEvent event;
};

using Payload = std::variant<Generate, TxDone, Arrive, Change>;

class TrafficSim {
 public:
  explicit TrafficSim(const TrafficScenario& s)
      : s_(s),
        live_(s.graph),
        n_(s.graph.node_count()),
        entries_(n_, std::vector<MultipathEntry>(n_)),
        credits_(n_, std::vector<CreditState>(n_)),
        queues_(n_, std::vector<std::deque<std::size_t>>(n_)),
        busy_(n_, std::vector<bool>(n_, false)) {
    for (NodeId i = 0; i < n_; ++i)
      for (NodeId j = 0; j < n_; ++j)
        credits_[i][j] = {j, s.config.credits_per_destination, s.config.credits_per_destination};
    reroute();
    for (std::size_t f = 0; f < s.flows.size(); ++f)
      if (s.flows[f].count > 0) queue_.push(s.flows[f].start, Generate{f});
    for (const sim::TopologyEvent& e : s.events) queue_.push(e.time, Change{e});
  }

  TrafficResult run() {
    while (!queue_.empty()) {
      auto e = queue_.pop();
      now_ = e.time;
      std::visit([this](auto& p) { handle(p); }, e.payload);
    }
    result_.metrics.end_time = now_;
    result_.credits_restored = true;
    for (const auto& row : credits_)
      for (const CreditState& c : row)
        if (c.available != c.total) result_.credits_restored = false;
    return result_;
  }

 private:
  std::uint64_t epoch(NodeId a, NodeId b) const {
    auto it = epochs_.find(edge_key(a, b));
    return it == epochs_.end() ? 0 : it->second;
  }

  void reroute() {
    NetworkGraph routing(n_);
    for (const Edge& e : live_.edges()) {
      EdgeAttrs a = e.attrs;
      a.cost = a.delay + s_.config.transmission_time;
      routing.add_edge(e.u, e.v, a);
    }
    sim::ScenarioScript script;
    script.graph = routing;
    const unicast::RunResult r = unicast::run(script, unicast::Protocol::Lpa);
    std::vector<double> dist(n_);
    for (NodeId j = 0; j < n_; ++j) {
      for (NodeId v = 0; v < n_; ++v) dist[v] = r.routes[v][j].distance;
      const std::vector<MultipathEntry> column = multipath_entries(live_, j, dist, s_.config);
      for (NodeId i = 0; i < n_; ++i) entries_[i][j] = column[i];
    }
  }

  std::optional<double> bound_at(NodeId i, NodeId j) const {
    const MultipathEntry& e = entries_[i][j];
    if (e.next_hops.empty() || !e.mad) return std::nullopt;
    const double ahead = static_cast<double>(queues_[i][j].size() + (busy_[i][j] ? 1 : 0));
    return compute_delay_bound({e.delta(), ahead * s_.config.transmission_time, *e.mad});
  }

  void enqueue(NodeId i, std::size_t id) {
    Packet& p = packets_[id];
    p.hops.push_back({i, now_, bound_at(i, p.destination)});
    queues_[i][p.destination].push_back(id);
    try_start(i, p.destination);
  }

  void release(NodeId i, NodeId j) {
    ++credits_[i][j].available;
    for (const Adjacent& a : live_.neighbors(i)) try_start(a.node, j);
  }

  void drop(NodeId i, std::size_t id) {
    ++result_.metrics.packets_dropped;
    release(i, packets_[id].destination);
  }

  void try_start(NodeId i, NodeId j) {
    auto& q = queues_[i][j];
    while (!busy_[i][j] && !q.empty()) {
      const ForwardDecision d = forward(entries_[i][j], [&](NodeId k) -> std::optional<int> {
        if (k == j) return 0;
        const CreditState& c = credits_[k][j];
        if (c.available < 1) return std::nullopt;
        return c.total - c.available;
      });
      if (d.kind == ForwardDecision::Kind::Wait) return;
      const std::size_t id = q.front();
      q.pop_front();
      if (d.kind == ForwardDecision::Kind::Drop) {
        drop(i, id);
        continue;
      }
      if (d.next_hop != j) --credits_[d.next_hop][j].available;
      busy_[i][j] = true;
      queue_.push(now_ + s_.config.transmission_time, TxDone{i, id, d.next_hop, epoch(i, d.next_hop)});
    }
  }

  void handle(const Generate& g) {
    const Flow& f = s_.flows[g.flow];
    const int k = generated_[g.flow]++;
    if (k + 1 < f.count) queue_.push(f.start + (k + 1) / f.rate, Generate{g.flow});
    if (!live_.has_node(f.source) || !live_.has_node(f.destination) || f.source == f.destination) {
      ++result_.unknown_destination;
      return;
    }
    if (admit(entries_[f.source][f.destination], credits_[f.source][f.destination]) ==
        Admission::Rejected) {
      ++result_.metrics.packets_rejected;
      return;
    }
    ++result_.metrics.packets_admitted;
    packets_.push_back({f.destination, now_, {}});
    enqueue(f.source, packets_.size() - 1);
  }

  void handle(const TxDone& t) {
    const NodeId j = packets_[t.packet].destination;
    busy_[t.node][j] = false;
    if (t.epoch != epoch(t.node, t.next) || !live_.has_edge(t.node, t.next)) {
      ++result_.metrics.packets_dropped;
      if (t.next != j) release(t.next, j);
      release(t.node, j);
      try_start(t.node, j);
      return;
    }
    const double delay = live_.attrs(t.node, t.next).delay;
    queue_.push(now_ + delay, Arrive{t.next, t.node, t.packet, t.epoch});
    release(t.node, j);
    try_start(t.node, j);
  }

  void handle(const Arrive& a) {
    Packet& p = packets_[a.packet];
    if (a.epoch != epoch(a.from, a.node)) {
      ++result_.metrics.packets_dropped;
      if (a.node != p.destination) release(a.node, p.destination);
      return;
    }
    if (a.node == p.destination) {
      deliver(p);
      return;
    }
    for (const Hop& h : p.hops)
      if (h.node == a.node) p.looped = true;
    if (p.looped) {
      ++result_.forwarding_loops;
      drop(a.node, a.packet);
      return;
    }
    enqueue(a.node, a.packet);
  }

  void deliver(const Packet& p) {
    ++result_.metrics.packets_delivered;
    result_.metrics.packet_latencies.push_back(now_ - p.created);
    for (const Hop& h : p.hops) {
      if (!h.bound) continue;
      ++result_.bound_checks;
      const double measured = now_ - h.arrival;
      if (!(measured < *h.bound)) ++result_.bound_violations;
      if (*h.bound > 0.0)
        result_.max_bound_slack_used = std::max(result_.max_bound_slack_used, measured / *h.bound);
    }
  }

  void handle(const Change& c) {
    const sim::TopologyEvent& e = c.event;
    auto bump = [this](NodeId a, NodeId b) { ++epochs_[edge_key(a, b)]; };
    switch (e.kind) {
      case sim::EventKind::LinkDown:
        if (live_.has_edge(e.u, e.v)) {
          live_.remove_edge(e.u, e.v);
          bump(e.u, e.v);
        }
        break;
      case sim::EventKind::LinkUp:
        if (!live_.has_edge(e.u, e.v)) live_.add_edge(e.u, e.v, e.attrs);
        break;
      case sim::EventKind::LinkCostChange:
        if (live_.has_edge(e.u, e.v)) {
          EdgeAttrs a = live_.attrs(e.u, e.v);
          a.cost = e.attrs.cost;
          live_.set_attrs(e.u, e.v, a);
        }
        break;
      case sim::EventKind::NodeDown:
        for (const Adjacent& a : std::vector<Adjacent>(live_.neighbors(e.u).begin(),
                                                       live_.neighbors(e.u).end())) {
          live_.remove_edge(e.u, a.node);
          bump(e.u, a.node);
        }
        break;
      default:
        throw sim::SimError("unsupported event in traffic scenario");
    }
    reroute();
    for (NodeId i = 0; i < n_; ++i)
      for (NodeId j = 0; j < n_; ++j) try_start(i, j);
  }

  const TrafficScenario& s_;
  NetworkGraph live_;
  int n_;
  std::vector<std::vector<MultipathEntry>> entries_;
  std::vector<std::vector<CreditState>> credits_;
  std::vector<std::vector<std::deque<std::size_t>>> queues_;
  std::vector<std::vector<bool>> busy_;
  std::map<EdgeKey, std::uint64_t> epochs_;
  std::map<std::size_t, int> generated_;
  std::vector<Packet> packets_;
  sim::EventQueue<Payload> queue_;
  double now_ = 0.0;
  TrafficResult result_;
};

}  // namespace

TrafficResult simulate_traffic(const TrafficScenario& scenario) {
  return TrafficSim(scenario).run();
}

TrafficScenario random_traffic(const WaxmanParams& params, int flow_count, bool with_failure,
                               double max_link_utilization) {
  TrafficScenario s;
  s.graph = waxman_connected(params);
  std::mt19937_64 rng(params.seed);
  const int n = s.graph.node_count();
  std::uniform_int_distribution<NodeId> node(0, n - 1);
  std::uniform_real_distribution<double> start(0.0, 20.0);
  std::uniform_real_distribution<double> rate(0.2, 1.0);
  std::uniform_int_distribution<int> count(5, 30);
  for (int f = 0; f < flow_count && n > 1; ++f) {
    Flow flow;
    flow.source = node(rng);
    do flow.destination = node(rng);
    while (flow.destination == flow.source);
    flow.start = start(rng);
    flow.rate = rate(rng);
    flow.count = count(rng);
    s.flows.push_back(flow);
  }
  // Offered load per directed link under shortest-delay routing; scale down to the cap.
  NetworkGraph routing(n);
  for (const Edge& e : s.graph.edges()) {
    EdgeAttrs a = e.attrs;
    a.cost = a.delay + s.config.transmission_time;
    routing.add_edge(e.u, e.v, a);
  }
  const unicast::RoutingSnapshot shortest = unicast::oracle_routes(routing);
  std::map<std::pair<NodeId, NodeId>, double> load;
  for (const Flow& f : s.flows)
    for (NodeId v = f.source; v != f.destination;) {
      const NodeId next = shortest[v][f.destination].successor;
      load[{v, next}] += f.rate / s.config.transmission_time;
      v = next;
    }
  double busiest = 0.0;
  for (const auto& [link, l] : load) busiest = std::max(busiest, l);
  if (busiest > max_link_utilization)
    for (Flow& f : s.flows) f.rate *= max_link_utilization / busiest;
  const auto edges = s.graph.edges();
  if (with_failure && !edges.empty()) {
    const Edge& e = edges[std::uniform_int_distribution<std::size_t>(0, edges.size() - 1)(rng)];
    s.events.push_back({25.0, sim::EventKind::LinkDown, e.u, e.v, {}});
  }
  return s;
}

}  // namespace netlab::multipath
