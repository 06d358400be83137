#include <gtest/gtest.h>

#include <deque>

#include "../support/oracles.hpp"
#include "netlab/multicast.hpp"

namespace netlab::multicast {
namespace {

// Root-path delays by walking the edge set directly.
std::map<NodeId, double> walk_delays(const NetworkGraph& g, NodeId root, const std::set<EdgeKey>& edges) {
  std::map<NodeId, double> delay{{root, 0.0}};
  std::deque<NodeId> queue{root};
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (const auto& [a, b] : edges) {
      const NodeId v = a == u ? b : b == u ? a : kNoNode;
      if (v == kNoNode || delay.contains(v)) continue;
      delay[v] = delay[u] + g.attrs(a, b).delay;
      queue.push_back(v);
    }
  }
  return delay;
}

void expect_steiner_shape(const NetworkGraph& g, const TreeRecord& t) {
  const auto delay = walk_delays(g, t.root, t.edges);
  std::set<NodeId> nodes{t.root};
  std::map<NodeId, int> degree;
  for (const auto& [a, b] : t.edges) {
    EXPECT_TRUE(g.has_edge(a, b));
    nodes.insert(a);
    nodes.insert(b);
    ++degree[a];
    ++degree[b];
  }
  EXPECT_EQ(nodes.size(), t.edges.size() + 1);
  EXPECT_EQ(delay.size(), nodes.size()) << "not connected";
  for (NodeId term : t.terminals) EXPECT_TRUE(delay.contains(term));
  for (const auto& [v, d] : degree)
    if (d == 1 && v != t.root) EXPECT_TRUE(t.terminals.contains(v)) << "relay leaf " << v;
}

NetworkGraph star() {
  NetworkGraph g(4);
  for (NodeId leaf = 1; leaf <= 3; ++leaf) g.add_edge(0, leaf, {1, 1, 1});
  return g;
}

TEST(TreeCost, Examples) {
  NetworkGraph g(4);
  g.add_edge(0, 1, {1, 1, 1});
  g.add_edge(1, 2, {4, 1, 1});
  g.add_edge(2, 3, {2, 1, 1});
  const TreeRecord empty = make_tree(g, 0, {0}, {});
  EXPECT_EQ(tree_cost(g, empty, CostMode::Utilization), 0.0);
  EXPECT_EQ(tree_cost(g, empty, CostMode::Congestion), 0.0);
  const TreeRecord line = make_tree(g, 0, {0, 3}, {{0, 1}, {1, 2}, {2, 3}});
  EXPECT_EQ(tree_cost(g, line, CostMode::Utilization), 7.0);
  EXPECT_EQ(tree_cost(g, line, CostMode::Congestion), 4.0);
}

TEST(Kmb, SourceOnlyGivesEmptyTree) {
  const TreeRecord t = kmb(star(), 2, {2});
  EXPECT_TRUE(t.edges.empty());
  EXPECT_EQ(t.cost, 0.0);
}

TEST(Kmb, StarLeavesUseTheCentre) {
  const NetworkGraph g = star();
  const TreeRecord t = kmb(g, 1, {2, 3});
  EXPECT_EQ(t.edges, (std::set<EdgeKey>{{0, 1}, {0, 2}, {0, 3}}));
  EXPECT_DOUBLE_EQ(t.cost, testing::brute_steiner_cost(g, {1, 2, 3}));
}

TEST(Kmb, UnreachableTerminalsAreListed) {
  NetworkGraph g(5);
  g.add_edge(0, 1, {1, 1, 1});
  g.add_edge(3, 4, {1, 1, 1});
  try {
    kmb(g, 0, {1, 3, 4});
    FAIL() << "expected MulticastError";
  } catch (const MulticastError& e) {
    EXPECT_EQ(e.nodes(), (std::vector<NodeId>{3, 4}));
  }
}

TEST(Kmb, WithinFactorOfOptimal) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const MulticastInstance in = random_instance({10, 0.8, 0.4, seed, 10}, 2, 5);
    const TreeRecord t = kmb(in.graph, in.source, in.destinations);
    SCOPED_TRACE(seed);
    expect_steiner_shape(in.graph, t);
    std::set<NodeId> terms = in.destinations;
    terms.insert(in.source);
    const double s = static_cast<double>(terms.size());
    const double opt = steiner_optimal(in.graph, terms).cost;
    EXPECT_LE(t.cost, 2.0 * (1.0 - 1.0 / s) * opt + 1e-9);
  }
}

TEST(Kmb, OracleAgreesWithBruteForceOnSmallGraphs) {
  for (std::uint32_t seed = 1; seed <= 20; ++seed) {
    const NetworkGraph g = testing::random_connected_graph(7, 0.4, seed);
    if (g.edge_count() > 14) continue;
    const std::set<NodeId> terms{0, 3, 6};
    EXPECT_DOUBLE_EQ(steiner_optimal(g, terms).cost, testing::brute_steiner_cost(g, terms));
  }
}

// Direct links 0-2 and 0-3 are fast but cost 10; relay 1 offers cost-1 links
// with delay 2 each.
NetworkGraph relay_instance() {
  NetworkGraph g(4);
  g.add_edge(0, 2, {10, 1, 1});
  g.add_edge(0, 3, {10, 1, 1});
  g.add_edge(0, 1, {1, 2, 1});
  g.add_edge(1, 2, {1, 2, 1});
  g.add_edge(1, 3, {1, 2, 1});
  return g;
}

TEST(Bsma, UnboundedRefinementTrace) {
  const NetworkGraph g = relay_instance();
  const BsmaResult r = bsma(g, {0, {2, 3}, {}, CostMode::Utilization, {}});
  ASSERT_EQ(r.trace.size(), 3u);
  EXPECT_DOUBLE_EQ(r.trace[0].cost, 20.0);
  EXPECT_EQ(r.trace[1].removed, (std::vector<NodeId>{0, 2}));
  EXPECT_EQ(r.trace[1].added, (std::vector<NodeId>{0, 1, 2}));
  EXPECT_DOUBLE_EQ(r.trace[1].cost, 12.0);
  EXPECT_EQ(r.trace[2].removed, (std::vector<NodeId>{0, 3}));
  EXPECT_EQ(r.trace[2].added, (std::vector<NodeId>{1, 3}));
  EXPECT_DOUBLE_EQ(r.trace[2].cost, 3.0);
  EXPECT_EQ(r.tree.edges, (std::set<EdgeKey>{{0, 1}, {1, 2}, {1, 3}}));
  EXPECT_DOUBLE_EQ(r.tree.delay.at(3), 4.0);
}

TEST(Bsma, BoundStopsTheSecondStep) {
  const NetworkGraph g = relay_instance();
  const BsmaResult r = bsma(g, {0, {2, 3}, {{2, 4.0}, {3, 3.5}}, CostMode::Utilization, {}});
  ASSERT_EQ(r.trace.size(), 2u);
  EXPECT_DOUBLE_EQ(r.tree.cost, 12.0);
  EXPECT_DOUBLE_EQ(r.tree.delay.at(3), 1.0);
}

TEST(Bsma, ExactBoundsKeepTheMinimumDelayTree) {
  const NetworkGraph g = relay_instance();
  const BsmaResult r = bsma(g, {0, {2, 3}, {{2, 1.0}, {3, 1.0}}, CostMode::Utilization, {}});
  EXPECT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.tree, minimum_delay_tree(g, 0, {2, 3}));
}

TEST(Bsma, InfeasibleBoundNamesTheDestination) {
  try {
    bsma(relay_instance(), {0, {2, 3}, {{3, 0.5}}, CostMode::Utilization, {}});
    FAIL() << "expected MulticastError";
  } catch (const MulticastError& e) {
    EXPECT_EQ(e.nodes(), (std::vector<NodeId>{3}));
  }
}

TEST(Bsma, CongestionModeLowersTheLargestLink) {
  const NetworkGraph g = relay_instance();
  const BsmaResult r = bsma(g, {0, {2, 3}, {}, CostMode::Congestion, {}});
  // The first step keeps max 10 but lowers the sum, which breaks the tie.
  ASSERT_GE(r.trace.size(), 2u);
  EXPECT_DOUBLE_EQ(r.trace[1].cost, 10.0);
  EXPECT_DOUBLE_EQ(r.trace[1].edge_cost_sum, 12.0);
  EXPECT_DOUBLE_EQ(r.trace.back().cost, 1.0);
}

TEST(Bsma, RandomInstancesStayFeasibleAndDecrease) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const MulticastInstance in = random_instance({10, 0.8, 0.4, seed, 10}, 2, 5);
    const TreeRecord md = minimum_delay_tree(in.graph, in.source, in.destinations);
    // Bounds at 1.5x each destination's shortest delay.
    MulticastRequest req{in.source, in.destinations, {}, CostMode::Utilization, {}};
    for (NodeId d : in.destinations) req.delay_bounds[d] = 1.5 * md.delay.at(d);
    const BsmaResult r = bsma(in.graph, req);
    SCOPED_TRACE(seed);
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      if (i > 0) EXPECT_LT(r.trace[i].cost, r.trace[i - 1].cost);
      const auto delays = walk_delays(in.graph, in.source, r.trace[i].edges);
      for (NodeId d : in.destinations) {
        ASSERT_TRUE(delays.contains(d));
        EXPECT_LE(delays.at(d), req.delay_bounds[d] + 1e-9);
      }
    }
    expect_steiner_shape(in.graph, r.tree);
    EXPECT_LE(r.tree.cost, md.cost + 1e-9);
  }
}

TEST(Sph, LargeLimitMatchesUnconstrained) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const MulticastInstance in = random_instance({10, 0.8, 0.4, seed, 10}, 2, 5);
    int max_degree = 0;
    for (NodeId v = 0; v < 10; ++v) max_degree = std::max(max_degree, in.graph.degree(v));
    const SphResult free = sph_degree_constrained(in.graph, in.source, in.destinations, std::nullopt);
    const SphResult limited =
        sph_degree_constrained(in.graph, in.source, in.destinations, std::max(2, max_degree));
    ASSERT_TRUE(free.tree && limited.tree);
    EXPECT_EQ(*free.tree, *limited.tree);
    expect_steiner_shape(in.graph, *free.tree);
    std::set<NodeId> terms = in.destinations;
    terms.insert(in.source);
    const double s = static_cast<double>(terms.size());
    EXPECT_LE(free.tree->cost, 2.0 * (1.0 - 1.0 / s) * steiner_optimal(in.graph, terms).cost + 1e-9);
  }
}

TEST(Sph, StarCentreOverLimitIsUnsolved) {
  const SphResult r = sph_degree_constrained(star(), 0, {1, 2, 3}, 2);
  EXPECT_FALSE(r.tree.has_value());
  EXPECT_EQ(r.unattached, (std::set<NodeId>{3}));
}

TEST(Sph, AttachesNearestFirst) {
  // From 0: 1 at cost 1, then 2 via 1 (cost 1) rather than directly (cost 3).
  NetworkGraph g(3);
  g.add_edge(0, 1, {1, 1, 1});
  g.add_edge(1, 2, {1, 1, 1});
  g.add_edge(0, 2, {3, 1, 1});
  const SphResult r = sph_degree_constrained(g, 0, {1, 2}, std::nullopt);
  ASSERT_TRUE(r.tree);
  EXPECT_EQ(r.tree->edges, (std::set<EdgeKey>{{0, 1}, {1, 2}}));
}

TEST(Sph, LimitBelowTwoIsRejected) {
  EXPECT_THROW(sph_degree_constrained(star(), 0, {1}, 1), std::invalid_argument);
}

TEST(Sph, DegreeLimitHoldsOnRandomInstances) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const MulticastInstance in = random_instance({10, 0.8, 0.4, seed, 10}, 3, 6);
    const SphResult r = sph_degree_constrained(in.graph, in.source, in.destinations, 2);
    if (!r.tree) {
      EXPECT_FALSE(r.unattached.empty());
      continue;
    }
    EXPECT_LE(r.tree->max_degree(), 2);
    expect_steiner_shape(in.graph, *r.tree);
  }
}

// Node 2 first joins through 1; once 1 leaves, the direct 0-2 link is cheaper.
NetworkGraph detour() {
  NetworkGraph g(3);
  g.add_edge(0, 1, {1, 1, 1});
  g.add_edge(1, 2, {1, 1, 1});
  g.add_edge(0, 2, {1.5, 1, 1});
  return g;
}

SessionState apply(const NetworkGraph& g, SessionState s, const std::vector<MembershipChange>& changes,
                   const Policy& policy) {
  for (const MembershipChange& c : changes) s = dynamic_update(g, s, c, policy).state;
  return s;
}

using Kind = MembershipChange::Kind;

TEST(Dynamic, GreedyKeepsTheRelay) {
  const NetworkGraph g = detour();
  const SessionState s =
      apply(g, start_session(g, 0), {{Kind::Join, 1}, {Kind::Join, 2}, {Kind::Leave, 1}}, {});
  EXPECT_EQ(s.tree.edges, (std::set<EdgeKey>{{0, 1}, {1, 2}}));
  EXPECT_EQ(s.members, (std::set<NodeId>{2}));
}

TEST(Dynamic, AriesRebuildsTheDamagedRegion) {
  const NetworkGraph g = detour();
  const Policy aries{Policy::Kind::Aries, 1};
  const SessionState s = apply(g, start_session(g, 0), {{Kind::Join, 1}, {Kind::Join, 2}}, aries);
  const UpdateOutcome o = dynamic_update(g, s, {Kind::Leave, 1}, aries);
  EXPECT_TRUE(o.rearranged);
  EXPECT_EQ(o.region, 1);
  EXPECT_EQ(o.state.tree.edges, (std::set<EdgeKey>{{0, 2}}));
  EXPECT_EQ(o.churn, 3u);
  EXPECT_TRUE(o.state.damage.counts.empty());
}

TEST(Dynamic, ThresholdTwoWaitsForASecondChange) {
  const NetworkGraph g = detour();
  const Policy aries{Policy::Kind::Aries, 2};
  const SessionState s = apply(g, start_session(g, 0), {{Kind::Join, 1}, {Kind::Join, 2}}, aries);
  const UpdateOutcome o = dynamic_update(g, s, {Kind::Leave, 1}, aries);
  EXPECT_FALSE(o.rearranged);
  EXPECT_EQ(o.state.damage.counts.at(1), 1);
  EXPECT_EQ(o.state.tree.edges, (std::set<EdgeKey>{{0, 1}, {1, 2}}));
}

TEST(Dynamic, LeaveOfNonMemberThrows) {
  const NetworkGraph g = detour();
  EXPECT_THROW(dynamic_update(g, start_session(g, 0), {Kind::Leave, 2}, {}), MulticastError);
}

TEST(Dynamic, LastLeaveEmptiesTheTree) {
  const NetworkGraph g = detour();
  const SessionState s = apply(g, start_session(g, 0), {{Kind::Join, 2}, {Kind::Leave, 2}}, {});
  EXPECT_TRUE(s.tree.edges.empty());
  EXPECT_TRUE(s.members.empty());
}

TEST(Dynamic, UnboundedAriesEqualsGreedy) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const MulticastInstance in = random_instance({20, 0.8, 0.4, seed, 10}, 1, 1);
    const auto events = random_membership_sequence(20, in.source, 50, seed);
    SessionState greedy = start_session(in.graph, in.source), aries = greedy;
    for (const MembershipChange& c : events) {
      greedy = dynamic_update(in.graph, greedy, c, {}).state;
      aries = dynamic_update(in.graph, aries, c, {Policy::Kind::Aries, std::nullopt}).state;
      ASSERT_EQ(greedy.tree, aries.tree);
      expect_steiner_shape(in.graph, greedy.tree);
    }
  }
}

TEST(Dynamic, ThresholdOneRearrangesEveryRegionChange) {
  const MulticastInstance in = random_instance({20, 0.8, 0.4, 4, 10}, 1, 1);
  SessionState s = start_session(in.graph, in.source);
  for (const MembershipChange& c : random_membership_sequence(20, in.source, 50, 4)) {
    const UpdateOutcome o = dynamic_update(in.graph, s, c, {Policy::Kind::Aries, 1});
    EXPECT_EQ(o.rearranged, o.region != kNoNode);
    EXPECT_EQ(o.churn, edge_churn(s.tree.edges, o.state.tree.edges));
    expect_steiner_shape(in.graph, o.state.tree);
    s = o.state;
  }
}

TEST(Dynamic, MembershipSequenceIsConsistent) {
  const auto events = random_membership_sequence(8, 3, 40, 11);
  ASSERT_EQ(events.size(), 40u);
  EXPECT_EQ(events.front().kind, Kind::Join);
  std::set<NodeId> members;
  for (const MembershipChange& c : events) {
    EXPECT_NE(c.node, 3);
    if (c.kind == Kind::Join)
      EXPECT_TRUE(members.insert(c.node).second);
    else
      EXPECT_EQ(members.erase(c.node), 1u);
  }
}

}  // namespace
}  // namespace netlab::multicast
