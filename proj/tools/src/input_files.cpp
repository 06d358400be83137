#include "input_files.hpp"

#include <algorithm>
#include <charconv>
#include <initializer_list>
#include <string_view>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "netlab/graph_io.hpp"

namespace netlab::cli {

namespace {

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), source_(path.string()) {
    try {
      root_ = YAML::LoadFile(source_);
    } catch (const YAML::BadFile&) {
      throw ParseError(0, "cannot open file", source_);
    } catch (const YAML::ParserException& e) {
      throw ParseError(e.mark.line + 1, e.msg, source_);
    }
    if (!root_.IsMap()) fail(root_, "expected a mapping at top level");
  }

  const YAML::Node& root() const { return root_; }

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    throw ParseError(node.Mark().line + 1, message, source_);
  }

  void only_keys(const YAML::Node& map, std::initializer_list<std::string_view> keys) const {
    if (!map.IsMap()) fail(map, "expected a mapping");
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      if (std::ranges::find(keys, key) == keys.end()) fail(kv.first, fmt::format("unknown key '{}'", key));
    }
  }

  YAML::Node require(const YAML::Node& map, const char* key) const {
    YAML::Node value = map[key];
    if (!value.IsDefined()) fail(map, fmt::format("missing '{}'", key));
    return value;
  }

  std::string text(const YAML::Node& node) const {
    if (!node.IsScalar()) fail(node, "expected a scalar");
    return node.Scalar();
  }

  double number(const YAML::Node& node) const {
    const std::string s = text(node);
    if (s == "inf" || s == ".inf" || s == "infinity") return kInfinity;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(node, fmt::format("bad number '{}'", s));
    return value;
  }

  int integer(const YAML::Node& node) const {
    const std::string s = text(node);
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(node, fmt::format("bad integer '{}'", s));
    return value;
  }

  bool boolean(const YAML::Node& node) const {
    const std::string s = text(node);
    if (s == "true") return true;
    if (s == "false") return false;
    fail(node, fmt::format("bad boolean '{}'", s));
  }

  std::uint64_t seed(const YAML::Node& node) const {
    const std::string s = text(node);
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(node, fmt::format("bad seed '{}'", s));
    return value;
  }

  NodeId node_id(const YAML::Node& node, const NetworkGraph& graph) const {
    const int id = integer(node);
    if (!graph.has_node(id)) fail(node, fmt::format("node {} not in graph", id));
    return id;
  }

  NetworkGraph graph(const YAML::Node& node) const {
    if (node.IsScalar()) {
      const std::filesystem::path file = path_.parent_path() / node.Scalar();
      return read_graph_file(file);
    }
    only_keys(node, {"nodes", "edges"});
    const int n = integer(require(node, "nodes"));
    if (n < 0) fail(node, "node count must be nonnegative");
    NetworkGraph g(n);
    if (const YAML::Node edges = node["edges"]) {
      if (!edges.IsSequence()) fail(edges, "edges must be a list");
      for (const YAML::Node& e : edges) {
        if (!e.IsSequence() || e.size() != 5) fail(e, "edge must be [u, v, cost, delay, capacity]");
        try {
          g.add_edge(integer(e[0]), integer(e[1]), {number(e[2]), number(e[3]), number(e[4])});
        } catch (const GraphError& err) {
          fail(e, err.what());
        }
      }
    }
    return g;
  }

  std::string stem() const { return path_.stem().string(); }

 private:
  std::filesystem::path path_;
  std::string source_;
  YAML::Node root_;
};

sim::TopologyEvent read_event(const Reader& r, const YAML::Node& e, const NetworkGraph& g) {
  r.only_keys(e, {"time", "kind", "u", "v", "cost", "delay", "capacity"});
  sim::TopologyEvent ev;
  ev.time = r.number(r.require(e, "time"));
  const YAML::Node kind = r.require(e, "kind");
  const auto parsed = sim::parse_event_kind(r.text(kind));
  if (!parsed || *parsed == sim::EventKind::MessageDelivery || *parsed == sim::EventKind::Timer)
    r.fail(kind, fmt::format("unknown event kind '{}'", r.text(kind)));
  ev.kind = *parsed;
  ev.u = r.node_id(r.require(e, "u"), g);
  const bool node_event = ev.kind == sim::EventKind::NodeUp || ev.kind == sim::EventKind::NodeDown;
  if (!node_event) ev.v = r.node_id(r.require(e, "v"), g);
  if (ev.kind == sim::EventKind::LinkUp || ev.kind == sim::EventKind::LinkCostChange) {
    // Missing attributes default to the current link's values when it exists.
    const EdgeAttrs base = g.has_edge(ev.u, ev.v) ? g.attrs(ev.u, ev.v) : EdgeAttrs{1.0, 1.0, 1.0};
    ev.attrs = base;
    if (e["cost"]) ev.attrs.cost = r.number(e["cost"]);
    if (e["delay"]) ev.attrs.delay = r.number(e["delay"]);
    if (e["capacity"]) ev.attrs.capacity = r.number(e["capacity"]);
    if (ev.kind == sim::EventKind::LinkCostChange && !e["cost"]) r.fail(e, "link-cost-change needs 'cost'");
  }
  return ev;
}

}  // namespace

ScenarioFile load_scenario(const std::filesystem::path& path) {
  const Reader r(path);
  const YAML::Node& root = r.root();
  r.only_keys(root, {"graph", "protocol", "source", "seed", "params", "kernel", "events"});
  ScenarioFile out;
  out.name = r.stem();
  sim::ScenarioScript& s = out.script;
  s.graph = r.graph(r.require(root, "graph"));
  if (root["protocol"]) s.protocol = r.text(root["protocol"]);
  if (root["source"]) out.source = r.node_id(root["source"], s.graph);
  if (root["seed"]) s.seed = r.seed(root["seed"]);
  if (const YAML::Node params = root["params"]) {
    if (!params.IsMap()) r.fail(params, "params must be a mapping");
    for (const auto& kv : params) s.params[kv.first.as<std::string>()] = r.number(kv.second);
  }
  if (const YAML::Node kernel = root["kernel"]) {
    r.only_keys(kernel, {"fixed_link_delay", "horizon", "warmup"});
    if (const YAML::Node d = kernel["fixed_link_delay"]) {
      if (d.IsScalar() && d.Scalar() == "link")
        s.kernel.fixed_link_delay.reset();
      else
        s.kernel.fixed_link_delay = r.number(d);
    }
    if (kernel["horizon"]) s.kernel.horizon = r.number(kernel["horizon"]);
    if (kernel["warmup"]) s.kernel.warmup = r.boolean(kernel["warmup"]);
  }
  if (const YAML::Node events = root["events"]) {
    if (!events.IsSequence()) r.fail(events, "events must be a list");
    double last = 0.0;
    for (const YAML::Node& e : events) {
      s.events.push_back(read_event(r, e, s.graph));
      if (s.events.back().time < last) r.fail(e, "event times must be nondecreasing");
      last = s.events.back().time;
    }
  }
  return out;
}

RequestFile load_request(const std::filesystem::path& path) {
  const Reader r(path);
  const YAML::Node& root = r.root();
  r.only_keys(root, {"graph", "source", "destinations", "algorithm", "mode", "bounds", "degree_limit",
                     "policy", "events"});
  RequestFile out;
  out.name = r.stem();
  out.graph = r.graph(r.require(root, "graph"));
  multicast::MulticastRequest& req = out.request;
  req.source = r.node_id(r.require(root, "source"), out.graph);
  if (const YAML::Node dests = root["destinations"]) {
    if (!dests.IsSequence()) r.fail(dests, "destinations must be a list");
    for (const YAML::Node& d : dests) req.destinations.insert(r.node_id(d, out.graph));
  }
  if (root["algorithm"]) {
    out.algorithm = r.text(root["algorithm"]);
    static constexpr std::string_view kKnown[] = {"kmb", "bsma", "sph", "min-delay"};
    if (std::ranges::find(kKnown, out.algorithm) == std::end(kKnown))
      r.fail(root["algorithm"], fmt::format("unknown algorithm '{}'", out.algorithm));
  }
  if (const YAML::Node mode = root["mode"]) {
    const auto parsed = multicast::parse_cost_mode(r.text(mode));
    if (!parsed) r.fail(mode, fmt::format("unknown mode '{}'", r.text(mode)));
    req.mode = *parsed;
  }
  if (const YAML::Node bounds = root["bounds"]) {
    if (!bounds.IsMap()) r.fail(bounds, "bounds must be a mapping");
    for (const auto& kv : bounds) req.delay_bounds[r.node_id(kv.first, out.graph)] = r.number(kv.second);
  }
  if (root["degree_limit"]) req.degree_limit = r.integer(root["degree_limit"]);
  if (const YAML::Node policy = root["policy"]) {
    r.only_keys(policy, {"kind", "threshold"});
    const std::string kind = r.text(r.require(policy, "kind"));
    if (kind == "greedy")
      out.policy.kind = multicast::Policy::Kind::Greedy;
    else if (kind == "aries")
      out.policy.kind = multicast::Policy::Kind::Aries;
    else
      r.fail(policy, fmt::format("unknown policy '{}'", kind));
    if (policy["threshold"]) out.policy.threshold = r.integer(policy["threshold"]);
  }
  if (const YAML::Node events = root["events"]) {
    if (!events.IsSequence()) r.fail(events, "events must be a list");
    for (const YAML::Node& e : events) {
      r.only_keys(e, {"join", "leave"});
      if (e.size() != 1) r.fail(e, "event must be {join: n} or {leave: n}");
      const bool join = static_cast<bool>(e["join"]);
      const NodeId n = r.node_id(join ? e["join"] : e["leave"], out.graph);
      out.events.push_back({join ? multicast::MembershipChange::Kind::Join : multicast::MembershipChange::Kind::Leave, n});
    }
  }
  return out;
}

RatesFile load_rates(const std::filesystem::path& path) {
  const Reader r(path);
  const YAML::Node& root = r.root();
  r.only_keys(root, {"links", "connections", "round_trip", "cell_rate", "horizon", "tolerance", "events"});
  RatesFile out;
  out.name = r.stem();
  const YAML::Node links = r.require(root, "links");
  if (!links.IsSequence()) r.fail(links, "links must be a list of capacities");
  for (const YAML::Node& c : links) out.network.capacities.push_back(r.number(c));
  const YAML::Node conns = r.require(root, "connections");
  if (!conns.IsSequence()) r.fail(conns, "connections must be a list");
  for (const YAML::Node& c : conns) {
    r.only_keys(c, {"route", "demand"});
    rates::ConnectionSpec spec;
    spec.id = static_cast<int>(out.network.connections.size());
    const YAML::Node route = r.require(c, "route");
    if (!route.IsSequence()) r.fail(route, "route must be a list of link indices");
    for (const YAML::Node& l : route) spec.route.push_back(r.integer(l));
    if (c["demand"]) spec.demand = r.number(c["demand"]);
    out.network.connections.push_back(std::move(spec));
  }
  try {
    rates::validate(out.network);
  } catch (const rates::RateError& e) {
    r.fail(conns, e.what());
  }
  if (root["round_trip"]) out.config.round_trip = r.number(root["round_trip"]);
  if (root["cell_rate"]) out.config.cell_rate = r.number(root["cell_rate"]);
  if (root["horizon"]) out.config.horizon = r.number(root["horizon"]);
  if (root["tolerance"]) out.config.tolerance = r.number(root["tolerance"]);
  if (const YAML::Node events = root["events"]) {
    if (!events.IsSequence()) r.fail(events, "events must be a list");
    for (const YAML::Node& e : events) {
      r.only_keys(e, {"time", "demand", "capacity"});
      rates::RateEvent ev;
      ev.time = r.number(r.require(e, "time"));
      const bool demand = static_cast<bool>(e["demand"]);
      if (demand == static_cast<bool>(e["capacity"])) r.fail(e, "event needs exactly one of demand, capacity");
      ev.kind = demand ? rates::RateEvent::Kind::Demand : rates::RateEvent::Kind::Capacity;
      const YAML::Node body = demand ? e["demand"] : e["capacity"];
      r.only_keys(body, {"index", "value"});
      ev.index = r.integer(r.require(body, "index"));
      ev.value = r.number(r.require(body, "value"));
      out.events.push_back(ev);
    }
  }
  return out;
}

}  // namespace netlab::cli
