#include <gtest/gtest.h>

#include <type_traits>

#include "../support/fake_host.hpp"
#include "netlab/unicast.hpp"

namespace netlab::unicast {
namespace {

using sim::EventKind;
using sim::ScenarioScript;

constexpr Protocol kAll[] = {Protocol::Dbf, Protocol::Ils, Protocol::Lpa, Protocol::Lva};

ScenarioScript scenario(NetworkGraph g, std::vector<sim::TopologyEvent> events = {}) {
  ScenarioScript s;
  s.graph = std::move(g);
  s.events = std::move(events);
  return s;
}

NetworkGraph line3() {
  NetworkGraph g(3);
  g.add_edge(0, 1, {1, 1, 1});
  g.add_edge(1, 2, {1, 1, 1});
  return g;
}

NetworkGraph triangle() {
  NetworkGraph g(3);
  g.add_edge(0, 1, {1, 1, 1});
  g.add_edge(1, 2, {1, 1, 1});
  g.add_edge(0, 2, {1, 1, 1});
  return g;
}

NetworkGraph pair_graph(double cost) {
  NetworkGraph g(2);
  g.add_edge(0, 1, {cost, 1, 1});
  return g;
}

void expect_distances_match(const RoutingSnapshot& got, const RoutingSnapshot& want,
                            double below = kInfinity) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    for (std::size_t j = 0; j < got.size(); ++j) {
      if (want[i][j].distance >= below) continue;
      EXPECT_NEAR(got[i][j].distance, want[i][j].distance, 1e-9) << i << "->" << j;
    }
}

std::vector<NodeId> next_hops(const RoutingSnapshot& snap) {
  std::vector<NodeId> hops;
  for (const auto& table : snap)
    for (const auto& e : table) hops.push_back(e.successor);
  return hops;
}

TEST(LoopCheck, NoSuccessorsIsAcyclic) {
  RoutingSnapshot snap(3, std::vector<RouteEntry>(3));
  EXPECT_TRUE(check_loop_freedom(snap, 2).acyclic);
}

TEST(LoopCheck, FindsTwoNodeCycle) {
  RoutingSnapshot snap(3, std::vector<RouteEntry>(3));
  snap[0][2].successor = 1;
  snap[1][2].successor = 0;
  snap[2][2].successor = 2;
  const LoopCheck c = check_loop_freedom(snap, 2);
  EXPECT_FALSE(c.acyclic);
  EXPECT_EQ(c.cycle, (std::vector<NodeId>{0, 1}));
}

TEST(LoopCheck, CycleStartsAtSmallestId) {
  RoutingSnapshot snap(5, std::vector<RouteEntry>(5));
  snap[4][0].successor = 2;
  snap[2][0].successor = 3;
  snap[3][0].successor = 4;
  snap[1][0].successor = 4;
  EXPECT_EQ(check_loop_freedom(snap, 0).cycle, (std::vector<NodeId>{2, 3, 4}));
}

TEST(Dbf, TwoNodeBootTakesTwoMessages) {
  const RunResult r = run(scenario(pair_graph(3)), Protocol::Dbf);
  EXPECT_EQ(r.metrics.warmup_messages, 2u);
  EXPECT_EQ(r.routes[0][1].distance, 3.0);
  EXPECT_EQ(r.routes[1][0].distance, 3.0);
}

TEST(Dbf, CostChangeToCurrentValueIsSilent) {
  const RunResult r =
      run(scenario(triangle(), {{0.0, EventKind::LinkCostChange, 0, 1, {1, 1, 1}}}), Protocol::Dbf);
  EXPECT_EQ(r.metrics.messages_sent, 0u);
}

std::uint64_t count_to_infinity_messages(Protocol p, double cap) {
  ScenarioScript s = scenario(line3(), {{0.0, EventKind::LinkDown, 1, 2, {}}});
  s.params["dbf.infinity"] = cap;
  const RunResult r = run(s, p);
  EXPECT_TRUE(r.metrics.quiescent);
  EXPECT_EQ(r.routes[0][2].distance, kInfinity);
  EXPECT_EQ(r.routes[1][2].distance, kInfinity);
  return r.metrics.messages_sent;
}

TEST(Dbf, CountsToInfinityLinearlyInTheCap) {
  const double m10 = static_cast<double>(count_to_infinity_messages(Protocol::Dbf, 10));
  const double m20 = static_cast<double>(count_to_infinity_messages(Protocol::Dbf, 20));
  EXPECT_GE(m20 / m10, 1.8);
  EXPECT_LE(m20 / m10, 2.2);
}

TEST(Lpa, CountToInfinityScenarioIsCapIndependent) {
  EXPECT_EQ(count_to_infinity_messages(Protocol::Lpa, 10),
            count_to_infinity_messages(Protocol::Lpa, 20));
}

TEST(Ils, StaleRecordIsNeitherStoredNorFlooded) {
  testing::FakeHost<LinkStateMessage> host(3, {{{1, {}}, {2, {}}}, {{0, {}}}, {{0, {}}}});
  IlsNode node(0, 3);
  auto ctx = host.context(0);
  node.on_message(ctx, 1, {{{1, 2, 4.0, 5}}});
  ASSERT_EQ(host.sent.size(), 1u);
  EXPECT_EQ(host.sent[0].to, 2);
  host.sent.clear();
  node.on_message(ctx, 1, {{{1, 2, 9.0, 3}}});
  node.on_message(ctx, 2, {{{1, 2, 9.0, 5}}});
  EXPECT_TRUE(host.sent.empty());
  EXPECT_EQ(node.topology().at({1, 2}).cost, 4.0);
}

TEST(Ils, CostChangeFloodCrossesEachLinkAtMostTwicePerRecord) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ScenarioScript s = suite_scenario({20, 0.4, 0.14, seed, 10}, ChangeKind::CostChange);
    const RunResult r = run(s, Protocol::Ils);
    // One record per endpoint of the changed link.
    EXPECT_LE(r.metrics.entries_by_type.at("lsu"), 2 * 2 * s.graph.edge_count()) << seed;
  }
}

TEST(Ils, TopologyTablesAgreeAfterQuiescence) {
  const ScenarioScript s = suite_scenario({15, 0.4, 0.14, 3, 10}, ChangeKind::MultiCostChange);
  sim::Simulator<IlsNode> sim(s.graph, [&] {
    std::vector<IlsNode> nodes;
    for (NodeId v = 0; v < 15; ++v) nodes.emplace_back(v, 15);
    return nodes;
  }());
  sim.run(s.events);
  for (NodeId v = 1; v < 15; ++v) EXPECT_EQ(sim.node(v).topology(), sim.node(0).topology());
}

TEST(Lpa, TriangleFailureIsLoopFree) {
  RunOptions opts;
  opts.check_loops = true;
  const RunResult r = run(scenario(triangle(), {{0.0, EventKind::LinkDown, 0, 1, {}}}), Protocol::Lpa, opts);
  EXPECT_EQ(r.metrics.loop_violations, 0u);
  EXPECT_EQ(r.lpa_query_entries_forwarded, 0u);
  EXPECT_EQ(r.routes[0][1].distance, 2.0);
  EXPECT_EQ(r.routes[0][1].successor, 2);
  EXPECT_EQ(r.routes[0][1].predecessor, 2);
}

TEST(Lpa, EntriesCarryOnePredecessor) {
  static_assert(std::is_same_v<decltype(LpaEntry::predecessor), NodeId>);
  const RunResult r = run(scenario(pair_graph(2)), Protocol::Lpa);
  EXPECT_EQ(r.metrics.warmup_messages, 2u);
}

TEST(Lpa, ReplyFromNonNeighborIsCounted) {
  testing::FakeHost<LpaMessage> host(3, {{{1, {}}}, {{0, {}}}, {}});
  LpaNode node(0, 3);
  auto ctx = host.context(0);
  node.on_start(ctx);
  node.on_message(ctx, 2, {{{2, 1, 1.0, 2, LpaFlag::Reply}}});
  EXPECT_EQ(host.protocol_errors, 1);
}

TEST(Lpa, QueryIsAnsweredNotRelayed) {
  // 0 - 1 - 2: node 1 hears a query from 0 about 2 and answers only 0.
  NetworkGraph g = line3();
  testing::FakeHost<LpaMessage> host(3, {{{1, {1, 1, 1}}}, {{0, {1, 1, 1}}, {2, {1, 1, 1}}}, {{1, {1, 1, 1}}}});
  LpaNode node(1, 3);
  auto ctx = host.context(1);
  node.on_start(ctx);
  host.sent.clear();
  node.on_message(ctx, 0, {{{0, 2, kInfinity, kNoNode, LpaFlag::Query}}});
  ASSERT_EQ(host.sent.size(), 1u);
  EXPECT_EQ(host.sent[0].to, 0);
  ASSERT_EQ(host.sent[0].message.entries.size(), 1u);
  EXPECT_EQ(host.sent[0].message.entries[0].flag, LpaFlag::Reply);
  EXPECT_EQ(host.sent[0].message.entries[0].distance, 1.0);
}

TEST(Lva, TwoNodeBootIsOneExchange) {
  const RunResult r = run(scenario(pair_graph(4)), Protocol::Lva);
  EXPECT_EQ(r.metrics.warmup_messages, 2u);
  EXPECT_EQ(r.routes[0][1].distance, 4.0);
}

TEST(Lva, ChangeOnUnusedLinkStaysLocal) {
  // Square 0-1-2-3-0 with an expensive chord 0-2 that no shortest path uses.
  NetworkGraph g(4);
  g.add_edge(0, 1, {1, 1, 1});
  g.add_edge(1, 2, {1, 1, 1});
  g.add_edge(2, 3, {1, 1, 1});
  g.add_edge(3, 0, {1, 1, 1});
  g.add_edge(0, 2, {9, 1, 1});
  const auto s = scenario(g, {{0.0, EventKind::LinkCostChange, 0, 2, {8, 1, 1}}});
  const RunResult lva = run(s, Protocol::Lva);
  const RunResult ils = run(s, Protocol::Ils);
  EXPECT_EQ(lva.metrics.messages_sent, 0u);
  EXPECT_GT(ils.metrics.messages_sent, 0u);
  EXPECT_EQ(next_hops(lva.routes), next_hops(ils.routes));
}

TEST(Unicast, ConvergedTablesMatchOracle) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    for (ChangeKind kind : kAllChangeKinds) {
      const ScenarioScript s = suite_scenario({16, 0.4, 0.14, seed, 10}, kind);
      for (Protocol p : kAll) {
        const RunResult r = run(s, p);
        ASSERT_TRUE(r.metrics.quiescent);
        SCOPED_TRACE(std::string(to_string(p)) + " seed " + std::to_string(seed) + " " +
                     std::string(to_string(kind)));
        const auto oracle = oracle_routes(r.final_topology);
        expect_distances_match(r.routes, oracle, p == Protocol::Dbf ? 100.0 : kInfinity);
      }
    }
  }
}

TEST(Lpa, QuiescesWhenAFailureCutsOffNodes) {
  // Link 3-12 is a bridge here; destinations 3 and 13 become unreachable.
  const ScenarioScript s = suite_scenario({20, 0.4, 0.14, 64, 10}, ChangeKind::LinkFailure);
  ASSERT_EQ(s.events.size(), 1u);
  NetworkGraph cut = s.graph;
  cut.remove_edge(s.events[0].u, s.events[0].v);
  ASSERT_FALSE(cut.connected());
  RunOptions o;
  o.check_loops = true;
  const RunResult r = run(s, Protocol::Lpa, o);
  EXPECT_TRUE(r.metrics.quiescent);
  EXPECT_EQ(r.metrics.loop_violations, 0u);
  expect_distances_match(r.routes, oracle_routes(r.final_topology), kInfinity);
}

TEST(Lva, LinkReaddedAfterDeletionIsUsable) {
  // Five simultaneous cost changes make node 5 drop and later re-add 5>7
  // under the same sequence number.
  const ScenarioScript s = suite_scenario({20, 0.4, 0.14, 66, 10}, ChangeKind::MultiCostChange);
  const RunResult r = run(s, Protocol::Lva);
  ASSERT_TRUE(r.metrics.quiescent);
  expect_distances_match(r.routes, oracle_routes(r.final_topology), kInfinity);
}

TEST(Unicast, LvaNextHopsEqualIls) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed)
    for (ChangeKind kind : kAllChangeKinds) {
      const ScenarioScript s = suite_scenario({16, 0.4, 0.14, seed, 10}, kind);
      EXPECT_EQ(next_hops(run(s, Protocol::Lva).routes), next_hops(run(s, Protocol::Ils).routes))
          << seed;
    }
}

TEST(Unicast, LpaLoopFreeOnRandomScenarios) {
  RunOptions opts;
  opts.check_loops = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
    for (ChangeKind kind : kAllChangeKinds) {
      const RunResult r = run(suite_scenario({20, 0.4, 0.14, seed, 10}, kind), Protocol::Lpa, opts);
      EXPECT_EQ(r.metrics.loop_violations, 0u) << seed;
      EXPECT_EQ(r.lpa_query_entries_forwarded, 0u);
    }
}

TEST(Unicast, RunIsReplayDeterministic) {
  const ScenarioScript s = suite_scenario({20, 0.4, 0.14, 7, 10}, ChangeKind::MultiCostChange);
  for (Protocol p : kAll) {
    const RunResult a = run(s, p), b = run(s, p);
    EXPECT_EQ(a.metrics, b.metrics);
    EXPECT_EQ(a.routes, b.routes);
  }
}

TEST(Unicast, ProtocolNames) {
  for (Protocol p : kAll) EXPECT_EQ(parse_protocol(to_string(p)), p);
  EXPECT_FALSE(parse_protocol("dual").has_value());
}

}  // namespace
}  // namespace netlab::unicast
