#include <gtest/gtest.h>

#include <random>

#include "lightfdg/widest_paths.hpp"
#include "oracles.hpp"

using namespace lightfdg;

namespace {

WidthGraph to_width_graph(const oracle::Graph& g) {
  WidthGraph w(g.nodes);
  for (const auto& a : g.arcs) w.add_edge(a.from, a.to, a.width);
  for (int v = 0; v < static_cast<int>(g.transit.size()); ++v) w.set_transit(v, g.transit[v]);
  return w;
}

// Leaves 0..2, spines 3..4, arcs both ways with the given uplink widths.
WidthGraph small_fabric(double w03, double w04) {
  WidthGraph g(5);
  for (int leaf = 0; leaf < 3; ++leaf) {
    for (int s = 3; s < 5; ++s) {
      const double w = leaf == 0 ? (s == 3 ? w03 : w04) : 10.0;
      g.add_edge(leaf, s, w);
      g.add_edge(s, leaf, 10.0);
    }
    g.set_transit(leaf, false);
  }
  return g;
}

}  // namespace

TEST(KWidestPaths, WiderPathFirst) {
  const auto paths = k_widest_paths(small_fabric(4.0, 7.0), 0, 1, 2);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].nodes, (std::vector<int>{0, 4, 1}));
  EXPECT_DOUBLE_EQ(paths[0].width, 7.0);
  EXPECT_EQ(paths[1].nodes, (std::vector<int>{0, 3, 1}));
  EXPECT_DOUBLE_EQ(paths[1].width, 4.0);
}

TEST(KWidestPaths, EqualWidthBrokenLexicographically) {
  const auto paths = k_widest_paths(small_fabric(5.0, 5.0), 0, 2, 2);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].nodes, (std::vector<int>{0, 3, 2}));
  EXPECT_EQ(paths[1].nodes, (std::vector<int>{0, 4, 2}));
}

TEST(KWidestPaths, LeavesAreNotTransit) {
  // Only 2-hop paths exist when leaves cannot relay, so k = 5 yields 2.
  const auto paths = k_widest_paths(small_fabric(1.0, 2.0), 0, 1, 5);
  ASSERT_EQ(paths.size(), 2u);
  for (const auto& p : paths) EXPECT_EQ(p.hops(), 2);
}

TEST(KWidestPaths, FewerHopsWinAtEqualWidth) {
  WidthGraph g(4);
  g.add_edge(0, 3, 2.0);
  g.add_edge(0, 1, 2.0);
  g.add_edge(1, 2, 2.0);
  g.add_edge(2, 3, 2.0);
  const auto paths = k_widest_paths(g, 0, 3, 3);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].nodes, (std::vector<int>{0, 3}));
  EXPECT_EQ(paths[1].nodes, (std::vector<int>{0, 1, 2, 3}));
}

TEST(KWidestPaths, UnreachableGivesEmpty) {
  WidthGraph g(3);
  g.add_edge(0, 1, 1.0);
  EXPECT_TRUE(k_widest_paths(g, 0, 2, 3).empty());
}

TEST(KWidestPaths, ParallelArcsCollapseToWidest) {
  WidthGraph g(2);
  g.add_edge(0, 1, 1.0);
  g.add_edge(0, 1, 3.0);
  g.add_edge(0, 1, 2.0);
  const auto paths = k_widest_paths(g, 0, 1, 4);
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_DOUBLE_EQ(paths[0].width, 3.0);
}

TEST(KWidestPaths, RejectsBadArguments) {
  WidthGraph g(3);
  EXPECT_THROW(k_widest_paths(g, 0, 1, 0), ContractError);
  EXPECT_THROW(k_widest_paths(g, 1, 1, 1), ContractError);
  EXPECT_THROW(k_widest_paths(g, 0, 3, 1), ContractError);
  EXPECT_THROW(g.add_edge(-1, 0, 1.0), ContractError);
}

TEST(KWidestPaths, MatchesBruteForceOnRandomGraphs) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    oracle::Graph g = oracle::random_graph(rng, 7);
    if (trial % 3 == 0) {
      g.transit.assign(g.nodes, true);
      for (int v = 0; v < g.nodes; ++v) g.transit[v] = std::bernoulli_distribution(0.3)(rng) ? false : true;
    }
    const WidthGraph wg = to_width_graph(g);
    const int src = 0, dst = g.nodes - 1;
    for (int k : {1, 2, 4, 8}) {
      const auto want = oracle::ranked_paths(g, src, dst, k);
      const auto got = k_widest_paths(wg, src, dst, k);
      ASSERT_EQ(got.size(), want.size()) << "trial " << trial << " k " << k;
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].nodes, want[i].nodes) << "trial " << trial << " k " << k << " rank " << i;
        EXPECT_DOUBLE_EQ(got[i].width, want[i].width);
      }
    }
  }
}
