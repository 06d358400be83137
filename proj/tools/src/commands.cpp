#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "input_files.hpp"
#include "netlab/broadcast.hpp"
#include "netlab/graph_io.hpp"
#include "netlab/multicast.hpp"
#include "netlab/rate_alloc.hpp"
#include "netlab/unicast.hpp"

namespace netlab::cli {

namespace {

using Json = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
  bool json() const { return format == "json"; }
};

struct Output {
  std::string text;
  bool flagged = false;  // non-quiescent, unsolved, unconverged
};

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

Json json_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + csv_field(fields[i]);
  return line + "\n";
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string by_type(const std::map<std::string, std::uint64_t>& counts) {
  std::string s;
  for (const auto& [type, n] : counts) s += fmt::format("{}{}={}", s.empty() ? "" : ";", type, n);
  return s;
}

// ---------------------------------------------------------------------------
// sim

constexpr const char* kSimColumns[] = {"scenario", "protocol", "seed", "messages", "entries",
                                       "messages_by_type", "convergence_time", "loop_violations",
                                       "quiescent"};

Output cmd_sim(const Globals& g, const std::vector<std::string>& files, const std::vector<std::string>& protocols) {
  Output out;
  Json rows = Json::array();
  std::string csv = fmt::format("# netlab sim seed={}\n", g.seed);
  csv += csv_row(std::vector<std::string>(std::begin(kSimColumns), std::end(kSimColumns)));
  for (const std::string& file : files) {
    ScenarioFile sf = load_scenario(file);
    sim::validate(sf.script);
    std::vector<std::string> names;
    for (const std::string& p : protocols)
      if (!p.empty()) names.push_back(p);
    if (names.empty() && !sf.script.protocol.empty()) names.push_back(sf.script.protocol);
    if (names.empty()) throw UsageError("no protocol");
    for (const std::string& name : names) {
      const auto protocol = unicast::parse_protocol(name);
      if (!protocol) throw UsageError(fmt::format("unknown protocol '{}'", name));
      unicast::RunOptions options;
      options.dbf_infinity = sf.script.param("dbf.infinity", options.dbf_infinity);
      options.check_loops = true;
      const unicast::RunResult r = unicast::run(sf.script, *protocol, options);
      const sim::MetricsLog& m = r.metrics;
      out.flagged = out.flagged || !m.quiescent;
      const std::optional<double> t = m.convergence_time;
      csv += csv_row({sf.name, name, std::to_string(sf.script.seed), std::to_string(m.messages_sent),
                      std::to_string(m.total_entries()), by_type(m.messages_by_type), t ? num(*t) : "",
                      std::to_string(m.loop_violations), m.quiescent ? "true" : "false"});
      rows.push_back(Json{{"scenario", sf.name},
                          {"protocol", name},
                          {"seed", sf.script.seed},
                          {"messages", m.messages_sent},
                          {"entries", m.total_entries()},
                          {"messages_by_type", m.messages_by_type},
                          {"entries_by_type", m.entries_by_type},
                          {"messages_dropped", m.messages_dropped},
                          {"convergence_time", t ? Json(*t) : Json()},
                          {"loop_violations", m.loop_violations},
                          {"protocol_errors", m.protocol_errors},
                          {"quiescent", m.quiescent}});
    }
  }
  out.text = g.json() ? dump(Json{{"command", "sim"}, {"seed", g.seed}, {"runs", rows}}) : csv;
  return out;
}

// ---------------------------------------------------------------------------
// mcast

Output cmd_mcast(const Globals& g, const std::string& file, const std::string& algorithm_override) {
  RequestFile rf = load_request(file);
  if (!algorithm_override.empty()) rf.algorithm = algorithm_override;
  const multicast::MulticastRequest& req = rf.request;
  Output out;
  std::optional<TreeRecord> tree;
  std::vector<multicast::BsmaStep> trace;
  std::set<NodeId> unattached;
  struct DynStep {
    multicast::MembershipChange change;
    std::size_t churn;
    bool rearranged;
    double cost;
  };
  std::vector<DynStep> steps;

  if (!rf.events.empty()) {
    multicast::SessionState state = multicast::start_session(rf.graph, req.source);
    for (NodeId d : req.destinations)
      state = multicast::dynamic_update(rf.graph, state, {multicast::MembershipChange::Kind::Join, d}, rf.policy).state;
    for (const auto& change : rf.events) {
      const multicast::UpdateOutcome u = multicast::dynamic_update(rf.graph, state, change, rf.policy);
      state = u.state;
      steps.push_back({change, u.churn, u.rearranged, multicast::tree_cost(rf.graph, state.tree, req.mode)});
    }
    tree = state.tree;
  } else if (rf.algorithm == "kmb") {
    tree = multicast::kmb(rf.graph, req.source, req.destinations);
  } else if (rf.algorithm == "bsma") {
    multicast::BsmaResult r = multicast::bsma(rf.graph, req);
    tree = r.tree;
    trace = std::move(r.trace);
  } else if (rf.algorithm == "min-delay") {
    tree = multicast::minimum_delay_tree(rf.graph, req.source, req.destinations);
  } else if (rf.algorithm == "sph") {
    multicast::SphResult r = multicast::sph_degree_constrained(rf.graph, req.source, req.destinations, req.degree_limit);
    tree = r.tree;
    unattached = r.unattached;
  } else {
    throw UsageError(fmt::format("unknown algorithm '{}'", rf.algorithm));
  }
  out.flagged = !tree.has_value();

  const std::string mode(multicast::to_string(req.mode));
  const std::string algorithm = rf.events.empty() ? rf.algorithm : "dynamic";
  std::string csv = fmt::format("# netlab mcast seed={} request={} algorithm={} mode={}\n", g.seed, rf.name,
                                algorithm, mode);
  csv += csv_row({"record", "a", "b", "value"});
  Json j{{"command", "mcast"}, {"seed", g.seed}, {"request", rf.name}, {"algorithm", algorithm},
         {"mode", mode},      {"source", req.source}, {"solved", tree.has_value()}};
  if (tree) {
    const double objective = multicast::tree_cost(rf.graph, *tree, req.mode);
    Json edges = Json::array();
    for (const auto& [a, b] : tree->edges) {
      csv += csv_row({"tree_edge", std::to_string(a), std::to_string(b), num(rf.graph.attrs(a, b).cost)});
      edges.push_back({a, b});
    }
    Json delays = Json::object();
    for (const auto& [d, delay] : tree->delay) {
      if (d == req.source) continue;
      csv += csv_row({"delay", std::to_string(d), "", num(delay)});
      delays[std::to_string(d)] = delay;
    }
    csv += csv_row({"cost", "", "", num(objective)});
    j["edges"] = edges;
    j["cost"] = objective;
    j["edge_cost_sum"] = tree->cost;
    j["delays"] = delays;
  } else {
    Json missing = Json::array();
    for (NodeId n : unattached) {
      csv += csv_row({"unattached", std::to_string(n), "", ""});
      missing.push_back(n);
    }
    j["unattached"] = missing;
  }
  if (!trace.empty()) {
    Json jt = Json::array();
    for (const auto& s : trace) {
      csv += csv_row({"trace", std::to_string(s.iteration), "", num(s.cost)});
      jt.push_back({{"iteration", s.iteration}, {"cost", s.cost}, {"removed", s.removed}, {"added", s.added}});
    }
    j["trace"] = jt;
  }
  if (!steps.empty()) {
    Json js = Json::array();
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const auto& s = steps[i];
      const char* kind = s.change.kind == multicast::MembershipChange::Kind::Join ? "join" : "leave";
      csv += csv_row({"step", std::to_string(i + 1), fmt::format("{} {}", kind, s.change.node), num(s.cost)});
      js.push_back({{"step", i + 1}, {kind, s.change.node}, {"churn", s.churn}, {"rearranged", s.rearranged},
                    {"cost", s.cost}});
    }
    j["steps"] = js;
  }
  out.text = g.json() ? dump(j) : csv;
  return out;
}

// ---------------------------------------------------------------------------
// bcast

Output cmd_bcast(const Globals& g, const std::string& file, const std::string& protocol_override) {
  const ScenarioFile sf = load_scenario(file);
  sim::validate(sf.script);
  const std::string name = protocol_override.empty() ? sf.script.protocol : protocol_override;
  if (name.empty()) throw UsageError("no protocol");
  const auto protocol = broadcast::parse_protocol(name);
  if (!protocol) throw UsageError(fmt::format("unknown protocol '{}'", name));
  if (!sf.source) throw ParseError(0, "broadcast scenario needs 'source'", file);
  const broadcast::BroadcastOutcome o = broadcast::run_broadcast(sf.script.graph, *sf.source, *protocol, sf.script.events);

  Output out;
  out.flagged = o.stalled || !o.metrics.quiescent;
  const auto ids = [](const std::set<NodeId>& s) {
    std::string text;
    for (NodeId n : s) text += (text.empty() ? "" : " ") + std::to_string(n);
    return text;
  };
  if (g.json()) {
    out.text = dump(Json{{"command", "bcast"},
                         {"seed", g.seed},
                         {"scenario", sf.name},
                         {"protocol", name},
                         {"source", *sf.source},
                         {"reached", o.reached},
                         {"source_notified", o.source_notified},
                         {"completion_time", o.completion_time ? Json(*o.completion_time) : Json()},
                         {"final_component", o.final_component},
                         {"topology_changed", o.topology_changed},
                         {"stalled", o.stalled},
                         {"messages", o.metrics.messages_sent},
                         {"messages_by_type", o.metrics.messages_by_type},
                         {"messages_dropped", o.metrics.messages_dropped},
                         {"duplicate_forwards", o.duplicate_forwards},
                         {"source_repeat_sends", o.source_repeat_sends},
                         {"protocol_errors", o.metrics.protocol_errors}});
  } else {
    out.text = fmt::format("# netlab bcast seed={}\n", g.seed) +
               csv_row({"scenario", "protocol", "source", "reached", "source_notified", "completion_time",
                        "final_component", "topology_changed", "stalled", "messages", "messages_by_type",
                        "duplicate_forwards", "source_repeat_sends"}) +
               csv_row({sf.name, name, std::to_string(*sf.source), ids(o.reached),
                        o.source_notified ? "true" : "false", o.completion_time ? num(*o.completion_time) : "",
                        ids(o.final_component), o.topology_changed ? "true" : "false", o.stalled ? "true" : "false",
                        std::to_string(o.metrics.messages_sent), by_type(o.metrics.messages_by_type),
                        std::to_string(o.duplicate_forwards), std::to_string(o.source_repeat_sends)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// rates

Output cmd_rates(const Globals& g, const std::string& file) {
  const RatesFile rf = load_rates(file);
  const rates::RateSimResult r = rates::simulate_rates(rf.network, rf.config, rf.events);
  Output out;
  out.flagged = !r.phases.back().converged;
  if (g.json()) {
    Json phases = Json::array();
    for (const auto& p : r.phases) {
      Json oracle = Json::array(), final_rates = Json::array();
      for (double v : p.oracle) oracle.push_back(json_num(v));
      for (double v : p.final_rates) final_rates.push_back(json_num(v));
      phases.push_back({{"start_time", p.start_time},
                        {"M", p.m},
                        {"D", p.d},
                        {"R", p.r},
                        {"converged", p.converged},
                        {"convergence_time", p.convergence_time ? Json(*p.convergence_time) : Json()},
                        {"oracle", oracle},
                        {"final_rates", final_rates}});
    }
    Json trace = Json::array();
    for (const auto& s : r.trace) trace.push_back({s.time, s.connection, s.rate});
    out.text = dump(Json{{"command", "rates"},
                         {"seed", g.seed},
                         {"config", rf.name},
                         {"phases", phases},
                         {"max_overshoot", r.max_overshoot},
                         {"cells_processed", r.cells_processed},
                         {"max_updates_per_cell", r.max_updates_per_cell},
                         {"trace", trace}});
  } else {
    out.text = fmt::format("# netlab rates seed={} config={}\n", g.seed, rf.name) +
               csv_row({"time", "connection", "rate"});
    for (const auto& s : r.trace)
      out.text += csv_row({num(s.time), std::to_string(s.connection), num(s.rate)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// gen

Output cmd_gen(const Globals& g, int nodes, double alpha, double beta, double capacity, bool connected) {
  if (nodes < 0) throw UsageError("--nodes must be nonnegative");
  const WaxmanParams params{nodes, alpha, beta, g.seed, capacity};
  const NetworkGraph graph = connected ? waxman_connected(params) : waxman_random(params);
  Output out;
  if (g.json()) {
    Json edges = Json::array();
    for (const Edge& e : graph.edges())
      edges.push_back({e.u, e.v, e.attrs.cost, e.attrs.delay, e.attrs.capacity});
    out.text = dump(Json{{"command", "gen"},
                         {"seed", g.seed},
                         {"alpha", alpha},
                         {"beta", beta},
                         {"nodes", graph.node_count()},
                         {"edges", edges}});
  } else {
    out.text = fmt::format("# netlab gen seed={} alpha={} beta={}\n", g.seed, num(alpha), num(beta)) +
               format_graph(graph);
  }
  return out;
}

// ---------------------------------------------------------------------------
// compare

Output cmd_compare(const Globals& g, int graphs, int nodes, double alpha, double beta,
                   const std::vector<std::string>& protocol_names) {
  if (graphs <= 0 || nodes <= 1) throw UsageError("--graphs must be positive and --nodes at least 2");
  std::vector<unicast::Protocol> protocols;
  for (const std::string& name : protocol_names) {
    if (name.empty()) continue;
    const auto p = unicast::parse_protocol(name);
    if (!p) throw UsageError(fmt::format("unknown protocol '{}'", name));
    protocols.push_back(*p);
  }
  if (protocols.empty()) throw UsageError("no protocol");

  struct Totals {
    int runs = 0;
    double messages = 0, entries = 0, convergence = 0;
    std::uint64_t loops = 0, non_quiescent = 0;
  };
  std::map<std::pair<int, int>, Totals> totals;  // (kind index, protocol index)
  for (int i = 0; i < graphs; ++i) {
    const WaxmanParams params{nodes, alpha, beta, g.seed + static_cast<std::uint64_t>(i)};
    for (std::size_t k = 0; k < std::size(unicast::kAllChangeKinds); ++k) {
      const sim::ScenarioScript script = unicast::suite_scenario(params, unicast::kAllChangeKinds[k]);
      for (std::size_t p = 0; p < protocols.size(); ++p) {
        unicast::RunOptions options;
        options.check_loops = true;
        const unicast::RunResult r = unicast::run(script, protocols[p], options);
        Totals& t = totals[{static_cast<int>(k), static_cast<int>(p)}];
        ++t.runs;
        t.messages += r.metrics.messages_sent;
        t.entries += r.metrics.total_entries();
        t.convergence += r.metrics.convergence_time.value_or(0.0);
        t.loops += r.metrics.loop_violations;
        t.non_quiescent += r.metrics.quiescent ? 0 : 1;
      }
    }
  }

  Output out;
  Json rows = Json::array();
  std::string csv = fmt::format("# netlab compare seed={} graphs={} nodes={} alpha={} beta={}\n", g.seed, graphs,
                                nodes, num(alpha), num(beta));
  csv += csv_row({"change", "protocol", "runs", "mean_messages", "mean_entries", "mean_convergence_time",
                  "loop_violations", "non_quiescent"});
  for (const auto& [key, t] : totals) {
    const std::string kind(unicast::to_string(unicast::kAllChangeKinds[key.first]));
    const std::string protocol(unicast::to_string(protocols[key.second]));
    out.flagged = out.flagged || t.non_quiescent > 0;
    csv += csv_row({kind, protocol, std::to_string(t.runs), num(t.messages / t.runs), num(t.entries / t.runs),
                    num(t.convergence / t.runs), std::to_string(t.loops), std::to_string(t.non_quiescent)});
    rows.push_back({{"change", kind},
                    {"protocol", protocol},
                    {"runs", t.runs},
                    {"mean_messages", t.messages / t.runs},
                    {"mean_entries", t.entries / t.runs},
                    {"mean_convergence_time", t.convergence / t.runs},
                    {"loop_violations", t.loops},
                    {"non_quiescent", t.non_quiescent}});
  }
  out.text = g.json() ? dump(Json{{"command", "compare"}, {"seed", g.seed}, {"graphs", graphs}, {"rows", rows}})
                      : csv;
  return out;
}

std::string one_line(std::string s) {
  std::ranges::replace(s, '\n', ' ');
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Network algorithms workbench", "netlab"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--out", g.out, "Output file (default: stdout)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  std::function<Output()> action;

  auto* sim_cmd = app.add_subcommand("sim", "Run routing protocols on scenario files");
  sim_cmd->fallthrough();
  std::vector<std::string> scenarios, protocols;
  sim_cmd->add_option("scenarios", scenarios, "Scenario files")->required();
  sim_cmd->add_option("--protocols", protocols, "dbf, ils, lpa, lva (default: the scenario's)")->delimiter(',');
  sim_cmd->callback([&] { action = [&] { return cmd_sim(g, scenarios, protocols); }; });

  auto* mcast_cmd = app.add_subcommand("mcast", "Build a multicast tree for a request file");
  mcast_cmd->fallthrough();
  std::string request, algorithm;
  mcast_cmd->add_option("request", request, "Request file")->required();
  mcast_cmd->add_option("--algorithm", algorithm, "kmb, bsma, sph or min-delay (overrides the request)");
  mcast_cmd->callback([&] { action = [&] { return cmd_mcast(g, request, algorithm); }; });

  auto* bcast_cmd = app.add_subcommand("bcast", "Run one broadcast over a scenario");
  bcast_cmd->fallthrough();
  std::string bcast_scenario, bcast_protocol;
  bcast_cmd->add_option("scenario", bcast_scenario, "Scenario file")->required();
  bcast_cmd->add_option("--protocol", bcast_protocol, "pi, pif or rbp (overrides the scenario)");
  bcast_cmd->callback([&] { action = [&] { return cmd_bcast(g, bcast_scenario, bcast_protocol); }; });

  auto* rates_cmd = app.add_subcommand("rates", "Simulate RM-cell rate allocation");
  rates_cmd->fallthrough();
  std::string rates_config;
  rates_cmd->add_option("config", rates_config, "Rate configuration file")->required();
  rates_cmd->callback([&] { action = [&] { return cmd_rates(g, rates_config); }; });

  auto* gen_cmd = app.add_subcommand("gen", "Generate a Waxman graph");
  gen_cmd->fallthrough();
  int nodes = 20;
  double alpha = 0.4, beta = 0.14, capacity = 10.0;
  bool connected = false;
  gen_cmd->add_option("--nodes", nodes)->capture_default_str();
  gen_cmd->add_option("--alpha", alpha)->capture_default_str();
  gen_cmd->add_option("--beta", beta)->capture_default_str();
  gen_cmd->add_option("--capacity", capacity)->capture_default_str();
  gen_cmd->add_flag("--connected", connected, "Join components with their shortest links");
  gen_cmd->callback([&] { action = [&] { return cmd_gen(g, nodes, alpha, beta, capacity, connected); }; });

  auto* compare_cmd = app.add_subcommand("compare", "Routing comparison suite on paired Waxman scenarios");
  compare_cmd->fallthrough();
  int graphs = 100, cmp_nodes = 20;
  double cmp_alpha = 0.4, cmp_beta = 0.14;
  std::vector<std::string> cmp_protocols{"dbf", "ils", "lpa", "lva"};
  compare_cmd->add_option("--graphs", graphs)->capture_default_str();
  compare_cmd->add_option("--nodes", cmp_nodes)->capture_default_str();
  compare_cmd->add_option("--alpha", cmp_alpha)->capture_default_str();
  compare_cmd->add_option("--beta", cmp_beta)->capture_default_str();
  compare_cmd->add_option("--protocols", cmp_protocols)->delimiter(',')->capture_default_str();
  compare_cmd->callback([&] {
    action = [&] { return cmd_compare(g, graphs, cmp_nodes, cmp_alpha, cmp_beta, cmp_protocols); };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "netlab: error: usage: " << one_line(e.what()) << "\n";
    return kUsage;
  }

  try {
    const Output result = action();
    if (g.out.empty()) {
      out << result.text;
    } else {
      std::ofstream file(g.out, std::ios::binary);
      if (!file) throw ParseError(0, "cannot write output file", g.out);
      file << result.text;
    }
    if (result.flagged) {
      err << "netlab: flag: run did not finish cleanly (non-quiescent, unsolved or unconverged)\n";
      return kRuntimeFlag;
    }
    return kOk;
  } catch (const UsageError& e) {
    err << "netlab: error: usage: " << one_line(e.what()) << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "netlab: error: input: " << one_line(e.what()) << "\n";
    return kInputError;
  }
}

}  // namespace netlab::cli
