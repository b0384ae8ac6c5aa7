#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "graphsim/algorithms/oracles.hpp"
#include "graphsim/graph.hpp"
#include "test_support.hpp"

using namespace graphsim;

TEST_CASE("edge list: empty input is a valid empty graph") {
    std::istringstream in("");
    const Graph g = load_edge_list(in, false);
    CHECK(g.num_vertices() == 0);
    CHECK(g.num_edges() == 0);
}

TEST_CASE("edge list: triangle") {
    std::istringstream in("0 1\n1 2\n2 0\n");
    const Graph g = load_edge_list(in, false);
    CHECK(g.num_vertices() == 3);
    CHECK(g.num_edges() == 3);
    const auto nb = g.neighbors(0);
    REQUIRE(nb.size() == 2);
    CHECK(nb[0] == 1);
    CHECK(nb[1] == 2);
}

TEST_CASE("edge list: dedup, reverse dedup and self-loop drop") {
    std::istringstream in("5 7\n7 5\n5 5\n");
    const Graph g = load_edge_list(in, false);
    CHECK(g.num_vertices() == 2);
    CHECK(g.num_edges() == 1);
    // first-appearance remapping keeps the original ids around
    CHECK(g.original_id(0) == 5);
    CHECK(g.original_id(1) == 7);
}

TEST_CASE("edge list: comments and blank lines are skipped") {
    std::istringstream in("% a comment\n# another\n\n  0 1\n");
    const Graph g = load_edge_list(in, false);
    CHECK(g.num_vertices() == 2);
    CHECK(g.num_edges() == 1);
}

TEST_CASE("edge list: malformed lines carry the line number") {
    {
        std::istringstream in("0 1\nfoo bar\n");
        CHECK_THROWS_WITH_AS(load_edge_list(in, false), doctest::Contains("line 2"), ParseError);
    }
    {
        std::istringstream in("0\n");
        CHECK_THROWS_AS(load_edge_list(in, false), ParseError);
    }
    {
        std::istringstream in("0 1 2\n");
        CHECK_THROWS_AS(load_edge_list(in, false), ParseError);
    }
    {
        std::istringstream in("0 1\n1 2x\n");
        try {
            load_edge_list(in, false);
            FAIL("expected ParseError");
        } catch (const ParseError &e) {
            CHECK(e.line() == 2);
        }
    }
}

TEST_CASE("directed load keeps both directions indexed") {
    std::istringstream in("0 1\n1 0\n2 1\n");
    const Graph g = load_edge_list(in, true);
    CHECK(g.num_vertices() == 3);
    CHECK(g.num_edges() == 3); // 0->1, 1->0, 2->1 are distinct arcs
    CHECK(g.out_degree(2) == 1);
    CHECK(g.in_degree(1) == 2);
    CHECK(g.out_degree(0) == 1);
}

TEST_CASE("undirected adjacency is symmetric and sorted") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Graph g = testsupport::random_graph(60, 0.1, seed);
        std::uint64_t total = 0;
        for (VertexId v = 0; v < g.num_vertices(); ++v) {
            const auto nb = g.neighbors(v);
            total += nb.size();
            CHECK(std::is_sorted(nb.begin(), nb.end()));
            CHECK(std::adjacent_find(nb.begin(), nb.end()) == nb.end());
            for (VertexId u : nb) {
                CHECK(u != v);
                CHECK(g.has_edge(u, v));
            }
        }
        CHECK(total == 2 * g.num_edges());
    }
}

TEST_CASE("serialize/load round-trips up to relabeling") {
    const Graph g = testsupport::random_graph(40, 0.12, 9);
    std::ostringstream out;
    g.serialize(out);
    std::istringstream in(out.str());
    const Graph h = load_edge_list(in, false);
    REQUIRE(h.num_vertices() == g.num_vertices());
    REQUIRE(h.num_edges() == g.num_edges());
    auto canonical = [](const Graph &x) {
        std::multiset<std::pair<std::uint64_t, std::uint64_t>> edges;
        for (VertexId u = 0; u < x.num_vertices(); ++u)
            for (VertexId v : x.neighbors(u)) {
                const auto a = x.original_id(u), b = x.original_id(v);
                if (a < b)
                    edges.emplace(a, b);
            }
        return edges;
    };
    CHECK(canonical(g) == canonical(h));
}

TEST_CASE("dorogovtsev-mendes generator") {
    const Graph base = generate_dorogovtsev_mendes(3, 123);
    CHECK(base.num_vertices() == 3);
    CHECK(base.num_edges() == 3); // the seed triangle

    const Graph g100 = generate_dorogovtsev_mendes(100, 1);
    CHECK(g100.num_vertices() == 100);
    CHECK(g100.num_edges() == 197); // m = 2n - 3

    // determinism: identical edge sets for the same seed
    const Graph a = generate_dorogovtsev_mendes(1000, 7);
    const Graph b = generate_dorogovtsev_mendes(1000, 7);
    REQUIRE(a.num_edges() == b.num_edges());
    for (VertexId v = 0; v < a.num_vertices(); ++v) {
        const auto na = a.neighbors(v), nb = b.neighbors(v);
        REQUIRE(na.size() == nb.size());
        CHECK(std::equal(na.begin(), na.end(), nb.begin()));
    }

    // m = 2n-3 and connectivity across sizes and seeds
    for (std::uint64_t seed = 0; seed < 4; ++seed)
        for (VertexId n : {3u, 10u, 257u}) {
            const Graph g = generate_dorogovtsev_mendes(n, seed);
            CHECK(g.num_edges() == 2 * static_cast<std::uint64_t>(n) - 3);
            const auto labels = algo::oracle_components(g);
            for (VertexId v = 0; v < n; ++v)
                CHECK(labels[v] == 0);
        }

    CHECK_THROWS_AS(generate_dorogovtsev_mendes(2, 0), std::invalid_argument);
}
