#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "../common.hpp"
#include "../exact_sum.hpp"
#include "../graph.hpp"

// Independent brute-force references. These are written against the Graph
// interface only and share no code with any engine; they exist to verify
// engine output, so they stay deliberately simple (union-find, dense
// iteration, triple enumeration) and are guarded to small inputs.

namespace graphsim::algo {

inline constexpr VertexId kOracleMaxVertices = 2000;

inline void oracle_size_guard(const Graph &graph) {
    if (graph.num_vertices() > kOracleMaxVertices)
        throw std::invalid_argument("oracle: graph exceeds the size guard of " +
                                    std::to_string(kOracleMaxVertices) + " vertices");
}

/// Union-find connected components; label(v) = min vertex id in v's
/// component.
inline std::vector<VertexId> oracle_components(const Graph &graph) {
    oracle_size_guard(graph);
    if (graph.directed())
        throw std::invalid_argument("oracle_components: undirected graphs only");
    const VertexId n = graph.num_vertices();
    std::vector<VertexId> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<VertexId> rank(n, 0);
    auto find = [&](VertexId v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    for (VertexId u = 0; u < n; ++u)
        for (VertexId v : graph.neighbors(u)) {
            VertexId ru = find(u), rv = find(v);
            if (ru == rv)
                continue;
            if (rank[ru] < rank[rv])
                std::swap(ru, rv);
            parent[rv] = ru;
            if (rank[ru] == rank[rv])
                ++rank[ru];
        }
    std::vector<VertexId> min_id(n, kNoVertex);
    for (VertexId v = 0; v < n; ++v) {
        const VertexId r = find(v);
        min_id[r] = std::min(min_id[r], v);
    }
    std::vector<VertexId> labels(n);
    for (VertexId v = 0; v < n; ++v)
        labels[v] = min_id[find(v)];
    return labels;
}

/// Dense power iteration of P_{i+1}(v) = a + (1-a) * sum over in-edges of
/// P_i(u)/outdeg(u), starting from P_0 = 1. Vertices without out-edges do
/// not redistribute their mass. Per-vertex sums are exact, which makes the
/// oracle bit-comparable with the engines.
inline std::vector<double> oracle_pagerank(const Graph &graph, double alpha,
                                           std::uint64_t iterations) {
    oracle_size_guard(graph);
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("oracle_pagerank: alpha must be in (0,1)");
    const VertexId n = graph.num_vertices();
    std::vector<double> score(n, 1.0), next(n);
    for (std::uint64_t it = 0; it < iterations; ++it) {
        for (VertexId v = 0; v < n; ++v) {
            ExactSum sum;
            for (VertexId u : graph.in_neighbors(v))
                sum.add(score[u] / graph.out_degree(u));
            next[v] = alpha + (1.0 - alpha) * sum.value();
        }
        score.swap(next);
    }
    return score;
}

/// Iterate until the max per-vertex change is at most eps; the reference
/// fixpoint for tolerance-mode comparisons.
inline std::vector<double> oracle_pagerank_fixpoint(const Graph &graph, double alpha, double eps,
                                                    std::uint64_t max_iterations = 100000) {
    oracle_size_guard(graph);
    const VertexId n = graph.num_vertices();
    std::vector<double> score(n, 1.0), next(n);
    for (std::uint64_t it = 0; it < max_iterations; ++it) {
        double max_delta = 0.0;
        for (VertexId v = 0; v < n; ++v) {
            ExactSum sum;
            for (VertexId u : graph.in_neighbors(v))
                sum.add(score[u] / graph.out_degree(u));
            next[v] = alpha + (1.0 - alpha) * sum.value();
            max_delta = std::max(max_delta, std::abs(next[v] - score[v]));
        }
        score.swap(next);
        if (max_delta <= eps)
            break;
    }
    return score;
}

struct TriangleOracle {
    std::vector<std::uint64_t> delta; // per-vertex triangle count
    std::uint64_t triangles = 0;
    std::uint64_t triplets = 0; // connected triplets, sum of deg*(deg-1)/2
};

/// Triple enumeration over each vertex's neighbor pairs.
inline TriangleOracle oracle_triangles(const Graph &graph) {
    oracle_size_guard(graph);
    if (graph.directed())
        throw std::invalid_argument("oracle_triangles: undirected graphs only");
    const VertexId n = graph.num_vertices();
    TriangleOracle out;
    out.delta.assign(n, 0);
    for (VertexId v = 0; v < n; ++v) {
        const auto nb = graph.neighbors(v);
        for (std::size_t i = 0; i < nb.size(); ++i)
            for (std::size_t j = i + 1; j < nb.size(); ++j)
                if (graph.has_edge(nb[i], nb[j]))
                    ++out.delta[v];
        const std::uint64_t d = nb.size();
        out.triplets += d * (d - 1) / 2;
    }
    for (std::uint64_t d : out.delta)
        out.triangles += d;
    out.triangles /= 3;
    return out;
}

} // namespace graphsim::algo
