#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "sqled/error.h"
#include "sqled/graph.h"
#include "support/graph_oracles.h"

namespace sqled {
namespace {

TEST(Graph, DenseIdsAndLeafOrder) {
  Graph g;
  const int a = g.add_internal("S");
  const int l2 = g.add_leaf(2);
  const int l0 = g.add_leaf(0);
  const int l1 = g.add_leaf(1);
  EXPECT_EQ(a, 0);
  EXPECT_EQ(l1, 3);
  EXPECT_EQ(g.leaf_order(), (std::vector<int>{l0, l1, l2}));
  EXPECT_EQ(g.leaf_count(), 3u);
}

TEST(Graph, RejectsBadEdges) {
  Graph g;
  g.add_internal("S");
  g.add_leaf(0);
  EXPECT_THROW(g.add_edge(0, 0, EdgeType::kChild), GraphError);
  EXPECT_THROW(g.add_edge(0, 5, EdgeType::kChild), GraphError);
  EXPECT_TRUE(g.add_edge(0, 1, EdgeType::kChild));
  EXPECT_FALSE(g.add_edge(0, 1, EdgeType::kChild));
  EXPECT_TRUE(g.add_edge(0, 1, EdgeType::kDependency));
  EXPECT_EQ(g.edges().size(), 2u);
}

TEST(Graph, TwoParentsRejected) {
  Graph g;
  g.add_internal("A");
  g.add_internal("B");
  g.add_leaf(0);
  g.add_edge(0, 2, EdgeType::kChild);
  g.add_edge(1, 2, EdgeType::kChild);
  EXPECT_THROW(g.parents(), GraphError);
}

TEST(Simplify, UnaryChainCollapsesToLeaf) {
  Graph g;
  g.add_internal("root");
  g.add_internal("A");
  g.add_internal("B");
  g.add_leaf(0);
  g.add_edge(0, 1, EdgeType::kChild);
  g.add_edge(1, 2, EdgeType::kChild);
  g.add_edge(2, 3, EdgeType::kChild);
  const Graph s = simplify_tree(g);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_TRUE(s.nodes()[0].is_leaf());
  EXPECT_EQ(s.nodes()[0].token_position, 0);
  EXPECT_TRUE(s.edges().empty());
}

TEST(Simplify, OnlyUnaryInternalsRemoved) {
  Graph g;
  g.add_internal("root");
  g.add_internal("A");
  g.add_leaf(0);
  g.add_leaf(1);
  g.add_edge(0, 1, EdgeType::kChild);
  g.add_edge(1, 2, EdgeType::kChild);
  g.add_edge(0, 3, EdgeType::kChild);
  const Graph s = simplify_tree(g);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.nodes()[0].label, "root");
  EXPECT_EQ(s.count_edges(EdgeType::kChild), 2u);
  EXPECT_TRUE(s.has_edge(0, 1, EdgeType::kChild));
  EXPECT_TRUE(s.has_edge(0, 2, EdgeType::kChild));
}

TEST(Simplify, NonChildEdgesFollowSurvivingChild) {
  Graph g;
  g.add_internal("root");
  g.add_internal("A");
  g.add_leaf(0);
  g.add_leaf(1);
  g.add_edge(0, 1, EdgeType::kChild);
  g.add_edge(1, 2, EdgeType::kChild);
  g.add_edge(0, 3, EdgeType::kChild);
  g.add_edge(3, 1, EdgeType::kDependency);
  const Graph s = simplify_tree(g);
  EXPECT_TRUE(s.has_edge(2, 1, EdgeType::kDependency));
}

TEST(Simplify, Errors) {
  EXPECT_THROW(simplify_tree(Graph{}), EmptyGraph);
  Graph cyc;
  cyc.add_internal("A");
  cyc.add_internal("B");
  cyc.add_leaf(0);
  cyc.add_edge(0, 1, EdgeType::kChild);
  cyc.add_edge(1, 0, EdgeType::kChild);
  cyc.add_edge(1, 2, EdgeType::kChild);
  EXPECT_THROW(simplify_tree(cyc), CycleError);
}

TEST(Simplify, MatchesFixedPointOracleOnRandomTrees) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Graph g = testing::random_tree(rng, 30, trial % 4);
    auto oracle = testing::to_oracle(g);
    testing::fixed_point_simplify(oracle);
    const Graph s = simplify_tree(g);
    s.validate();
    EXPECT_EQ(testing::canonical_form(s), testing::canonical_form(oracle)) << "trial " << trial;
    EXPECT_EQ(testing::unary_internal_count(s), 0u);
    EXPECT_EQ(testing::leaf_positions(s), testing::leaf_positions(g));
    EXPECT_EQ(simplify_tree(s), s);
  }
}

TEST(Sequential, CountsAndDirection) {
  Graph one;
  one.add_leaf(0);
  EXPECT_EQ(add_sequential_edges(one).count_edges(EdgeType::kSequential), 0u);

  Graph three;
  three.add_internal("S");
  three.add_leaf(2);
  three.add_leaf(0);
  three.add_leaf(1);
  for (int i = 1; i <= 3; ++i) three.add_edge(0, i, EdgeType::kChild);
  const Graph s = add_sequential_edges(three);
  EXPECT_EQ(s.count_edges(EdgeType::kSequential), 2u);
  EXPECT_TRUE(s.has_edge(2, 3, EdgeType::kSequential));
  EXPECT_TRUE(s.has_edge(3, 1, EdgeType::kSequential));
  EXPECT_EQ(add_sequential_edges(s), s);

  Graph none;
  none.add_internal("S");
  EXPECT_THROW(add_sequential_edges(none), EmptyGraph);
}

TEST(Sequential, LeafCountMinusOneOnRandomTrees) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = simplify_tree(testing::random_tree(rng, 40));
    const Graph s = add_sequential_edges(g);
    EXPECT_EQ(s.count_edges(EdgeType::kSequential), g.leaf_count() - 1);
    EXPECT_EQ(s.count_edges(EdgeType::kChild), g.count_edges(EdgeType::kChild));
  }
}

TEST(Symmetrize, SelfLoopsOnly) {
  Graph g;
  for (int i = 0; i < 3; ++i) g.add_leaf(i);
  const MessageGraph m = symmetrize_with_self_loops(g);
  EXPECT_EQ(m.num_nodes, 3);
  ASSERT_EQ(m.edges.size(), 3u);
  for (const auto& e : m.edges) {
    EXPECT_EQ(e.src, e.dst);
    EXPECT_EQ(e.type, EdgeType::kSelfLoop);
  }
}

TEST(Symmetrize, ReverseEdgesKeepType) {
  Graph g;
  g.add_internal("a");
  g.add_leaf(0);
  g.add_edge(0, 1, EdgeType::kChild);
  const MessageGraph m = symmetrize_with_self_loops(g);
  const std::set<Edge> got(m.edges.begin(), m.edges.end());
  const std::set<Edge> want{{0, 1, EdgeType::kChild},
                            {1, 0, EdgeType::kChild},
                            {0, 0, EdgeType::kSelfLoop},
                            {1, 1, EdgeType::kSelfLoop}};
  EXPECT_EQ(got, want);
}

TEST(Symmetrize, EqualsUnionOracleOnRandomGraphs) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = testing::random_tree(rng, 20, 6);
    std::set<Edge> want;
    for (const auto& e : g.edges()) {
      want.insert(e);
      want.insert({e.dst, e.src, e.type});
    }
    for (int i = 0; i < static_cast<int>(g.size()); ++i) want.insert({i, i, EdgeType::kSelfLoop});
    const MessageGraph m = symmetrize_with_self_loops(g);
    EXPECT_EQ(std::set<Edge>(m.edges.begin(), m.edges.end()), want);
    EXPECT_EQ(m.edges.size(), want.size());
    EXPECT_TRUE(std::is_sorted(m.edges.begin(), m.edges.end(), [](const Edge& a, const Edge& b) {
      return std::tie(a.dst, a.src, a.type) < std::tie(b.dst, b.src, b.type);
    }));
  }
}

TEST(GraphText, RoundTrip) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Graph g = testing::random_tree(rng, 15, 3);
    std::istringstream in(to_text(g));
    EXPECT_EQ(read_graph(in), g);
  }
}

TEST(GraphText, Golden) {
  Graph g;
  g.add_internal("S");
  g.add_leaf(0);
  g.add_edge(0, 1, EdgeType::kChild);
  EXPECT_EQ(to_text(g), "node 0 internal S\nnode 1 leaf 0\nedge 0 1 child\n");
}

}  // namespace
}  // namespace sqled
