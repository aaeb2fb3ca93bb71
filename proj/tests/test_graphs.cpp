#include <noisycons/graph.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

using namespace noisycons;

namespace {

std::vector<std::size_t> sorted_degrees(const Graph& g)
{
    auto d = degrees(g);
    std::sort(d.begin(), d.end());
    return d;
}

} // namespace

TEST(BuildGraph, StarCenterIsNodeZero)
{
    const Graph g = build_graph(family::Star{}, 4);
    const std::vector<Edge> expected{{0, 1}, {0, 2}, {0, 3}};
    EXPECT_EQ(g.edges(), expected);
    EXPECT_EQ(degrees(g), (std::vector<std::size_t>{3, 1, 1, 1}));
}

TEST(BuildGraph, SingleNodeComplete)
{
    const Graph g = build_graph(family::Complete{}, 1);
    EXPECT_EQ(g.node_count(), 1u);
    EXPECT_EQ(g.edge_count(), 0u);
    EXPECT_TRUE(is_connected(g));
}

TEST(BuildGraph, StarryLineNine)
{
    const Graph g = build_graph(family::StarryLine{}, 9);
    EXPECT_EQ(g.edge_count(), 8u);
    EXPECT_TRUE(is_connected(g));
    // Two star centers of degree 3 (two leaves + a line endpoint), a line of
    // three whose middle has degree 2, and four leaves.
    EXPECT_EQ(sorted_degrees(g), (std::vector<std::size_t>{1, 1, 1, 1, 2, 2, 2, 3, 3}));
    EXPECT_EQ(g.degree(0), 3u);
    EXPECT_EQ(g.degree(8), 3u);
    EXPECT_EQ(g.degree(4), 2u);
}

TEST(BuildGraph, RingDegrees)
{
    EXPECT_EQ(degrees(build_graph(family::Ring{}, 5)), (std::vector<std::size_t>(5, 2)));
}

TEST(BuildGraph, TwoStarCentersAtEnds)
{
    const Graph g = build_graph(family::TwoStar{}, 10);
    EXPECT_TRUE(g.has_edge(0, 9));
    EXPECT_EQ(g.degree(0) + g.degree(9), 2u + 8u);
    EXPECT_EQ(g.edge_count(), 9u);
}

TEST(BuildGraph, EdgeCountsMatchClosedForms)
{
    for (std::size_t n : {3, 7, 15, 31}) {
        EXPECT_EQ(build_graph(family::Complete{}, n).edge_count(), n * (n - 1) / 2);
        EXPECT_EQ(build_graph(family::Line{}, n).edge_count(), n - 1);
        EXPECT_EQ(build_graph(family::Ring{}, n).edge_count(), n);
        EXPECT_EQ(build_graph(family::Star{}, n).edge_count(), n - 1);
        EXPECT_EQ(build_graph(family::TwoStar{}, n + 1).edge_count(), n);
        EXPECT_EQ(build_graph(family::CompleteBinaryTree{}, n).edge_count(), n - 1);
    }
}

TEST(BuildGraph, EveryFamilyIsConnected)
{
    const std::vector<std::pair<GraphFamily, std::size_t>> cases{
        {family::Complete{}, 12},  {family::Line{}, 12},  {family::Ring{}, 12},
        {family::Star{}, 12},      {family::TwoStar{}, 12}, {family::StarryLine{}, 12},
        {family::Grid{2}, 16},     {family::Grid{3}, 27}, {family::CompleteBinaryTree{}, 15},
        {family::ErdosRenyi{0.3}, 20}, {family::RandomRegular{3}, 20}};
    for (const auto& [fam, n] : cases) {
        const Graph g = build_graph(fam, n, 7);
        EXPECT_EQ(g.node_count(), n) << g.family_tag();
        EXPECT_TRUE(is_connected(g)) << g.family_tag();
    }
}

TEST(BuildGraph, GridIsLattice)
{
    const Graph g = build_graph(family::Grid{2}, 9);
    EXPECT_EQ(g.edge_count(), 12u);
    EXPECT_EQ(g.max_degree(), 4u);
}

TEST(BuildGraph, ConstraintViolations)
{
    EXPECT_THROW(build_graph(family::StarryLine{}, 10), Error);
    EXPECT_THROW(build_graph(family::Grid{2}, 10), Error);
    EXPECT_THROW(build_graph(family::CompleteBinaryTree{}, 10), Error);
    EXPECT_THROW(build_graph(family::RandomRegular{3}, 7), Error); // n*d odd
    EXPECT_THROW(build_graph(family::RandomRegular{8}, 8), Error); // d >= n
    EXPECT_THROW(build_graph(family::Ring{}, 2), Error);
    EXPECT_THROW(build_graph(family::Line{}, 0), Error);
    try {
        build_graph(family::Grid{2}, 10);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidParam);
    }
}

TEST(BuildGraph, SparseErdosRenyiGivesUp)
{
    try {
        build_graph(family::ErdosRenyi{1e-6}, 50, 1);
        FAIL() << "expected GenerationFailed";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GenerationFailed);
    }
}

TEST(BuildGraph, RandomFamiliesAreSeedDeterministic)
{
    EXPECT_EQ(build_graph(family::ErdosRenyi{0.2}, 30, 11), build_graph(family::ErdosRenyi{0.2}, 30, 11));
    EXPECT_EQ(build_graph(family::RandomRegular{4}, 30, 11), build_graph(family::RandomRegular{4}, 30, 11));
    EXPECT_FALSE(build_graph(family::ErdosRenyi{0.2}, 30, 11) == build_graph(family::ErdosRenyi{0.2}, 30, 12));
}

TEST(BuildGraph, RandomRegularDegrees)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Graph g = build_graph(family::RandomRegular{3}, 40, seed);
        EXPECT_EQ(degrees(g), std::vector<std::size_t>(40, 3));
    }
}

TEST(GraphPredicates, Bipartite)
{
    EXPECT_TRUE(is_bipartite(build_graph(family::Ring{}, 4)));
    EXPECT_FALSE(is_bipartite(build_graph(family::Ring{}, 5)));
    EXPECT_TRUE(is_bipartite(build_graph(family::CompleteBinaryTree{}, 7)));
}

TEST(GraphPredicates, DisjointEdgesAreDisconnected)
{
    const Graph g(4, {{0, 1}, {2, 3}});
    EXPECT_FALSE(is_connected(g));
}

TEST(GraphValidation, RejectsLoopsDuplicatesAndRange)
{
    EXPECT_THROW(Graph(3, {{1, 1}}), Error);
    EXPECT_THROW(Graph(3, {{0, 1}, {1, 0}}), Error);
    EXPECT_THROW(Graph(3, {{0, 3}}), Error);
}

TEST(ParseFamily, Names)
{
    EXPECT_TRUE(std::holds_alternative<family::StarryLine>(parse_family("starry-line")));
    EXPECT_EQ(std::get<family::Grid>(parse_family("grid3d")).dim, 3);
    EXPECT_EQ(std::get<family::Grid>(parse_family("grid2")).dim, 2);
    EXPECT_THROW(parse_family("hypercube"), Error);
}

TEST(EdgeList, ParsesAndValidates)
{
    std::istringstream ok("4\n0 1\n1 2\n2 3\n");
    const Graph g = parse_edge_list(ok);
    EXPECT_EQ(g.node_count(), 4u);
    EXPECT_EQ(g.edge_count(), 3u);

    std::istringstream dangling("3\n0 1\n2\n");
    EXPECT_THROW(parse_edge_list(dangling), Error);
    std::istringstream junk("3\n0 x\n");
    EXPECT_THROW(parse_edge_list(junk), Error);
    EXPECT_THROW(load_edge_list("/nonexistent/edges.txt"), Error);
}
