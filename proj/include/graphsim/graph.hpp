#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "common.hpp"

namespace graphsim {

/// Immutable simple graph in CSR form with dense vertex ids 0..n-1.
///
/// Undirected graphs store both directions in the adjacency, so the sum of
/// neighbor list lengths is 2m. For directed graphs a mirrored in-neighbor
/// structure is kept as well. Neighbor lists are strictly increasing and
/// free of self-loops and duplicates. Instances are immutable after
/// construction and safe to share across threads.
class Graph {
public:
    Graph() : directed_(false) { offsets_.push_back(0); }

    /// Build from raw (not necessarily dense) edge endpoints. Ids are
    /// remapped to 0..n-1 in order of first appearance; self-loops are
    /// dropped and parallel edges (for undirected graphs also reverse
    /// duplicates) are deduplicated.
    static Graph from_edges(const std::vector<std::pair<std::uint64_t, std::uint64_t>> &edges,
                            bool directed) {
        std::unordered_map<std::uint64_t, VertexId> remap;
        std::vector<std::uint64_t> original;
        auto intern = [&](std::uint64_t raw) {
            auto [it, fresh] = remap.try_emplace(raw, static_cast<VertexId>(original.size()));
            if (fresh)
                original.push_back(raw);
            return it->second;
        };
        std::vector<std::pair<VertexId, VertexId>> dense;
        dense.reserve(edges.size());
        for (const auto &[u, v] : edges) {
            const VertexId du = intern(u);
            const VertexId dv = intern(v);
            if (du == dv)
                continue; // self-loop
            dense.emplace_back(du, dv);
        }
        Graph g = from_dense_edges(static_cast<VertexId>(original.size()), dense, directed);
        g.original_ids_ = std::move(original);
        return g;
    }

    /// Build from endpoints that are already dense in 0..n-1.
    static Graph from_dense_edges(VertexId n, std::vector<std::pair<VertexId, VertexId>> edges,
                                  bool directed) {
        for (auto &[u, v] : edges) {
            if (u >= n || v >= n)
                throw std::invalid_argument("Graph: endpoint out of range");
            if (!directed && u > v)
                std::swap(u, v); // canonical orientation for dedup
        }
        std::erase_if(edges, [](const auto &e) { return e.first == e.second; });
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

        Graph g;
        g.directed_ = directed;
        g.n_ = n;
        g.m_ = edges.size();
        std::vector<std::pair<VertexId, VertexId>> arcs;
        arcs.reserve(directed ? edges.size() : 2 * edges.size());
        for (const auto &[u, v] : edges) {
            arcs.emplace_back(u, v);
            if (!directed)
                arcs.emplace_back(v, u);
        }
        std::sort(arcs.begin(), arcs.end());
        g.offsets_.assign(n + 1, 0);
        g.adjacency_.reserve(arcs.size());
        for (const auto &[u, v] : arcs) {
            ++g.offsets_[u + 1];
            g.adjacency_.push_back(v);
        }
        for (VertexId v = 0; v < n; ++v)
            g.offsets_[v + 1] += g.offsets_[v];
        if (directed) {
            std::vector<std::pair<VertexId, VertexId>> rev;
            rev.reserve(arcs.size());
            for (const auto &[u, v] : arcs)
                rev.emplace_back(v, u);
            std::sort(rev.begin(), rev.end());
            g.in_offsets_.assign(n + 1, 0);
            g.in_adjacency_.reserve(rev.size());
            for (const auto &[v, u] : rev) {
                ++g.in_offsets_[v + 1];
                g.in_adjacency_.push_back(u);
            }
            for (VertexId v = 0; v < n; ++v)
                g.in_offsets_[v + 1] += g.in_offsets_[v];
        }
        g.original_ids_.resize(n);
        for (VertexId v = 0; v < n; ++v)
            g.original_ids_[v] = v;
        return g;
    }

    VertexId num_vertices() const { return n_; }
    std::uint64_t num_edges() const { return m_; }
    bool directed() const { return directed_; }

    /// Total adjacency entries (m for directed, 2m for undirected).
    std::uint64_t num_arcs() const { return adjacency_.size(); }

    std::span<const VertexId> out_neighbors(VertexId v) const {
        return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
    }

    std::span<const VertexId> in_neighbors(VertexId v) const {
        if (!directed_)
            return out_neighbors(v);
        return {in_adjacency_.data() + in_offsets_[v], in_adjacency_.data() + in_offsets_[v + 1]};
    }

    /// For undirected graphs identical to out_neighbors.
    std::span<const VertexId> neighbors(VertexId v) const { return out_neighbors(v); }

    std::uint32_t out_degree(VertexId v) const {
        return static_cast<std::uint32_t>(offsets_[v + 1] - offsets_[v]);
    }

    std::uint32_t in_degree(VertexId v) const {
        if (!directed_)
            return out_degree(v);
        return static_cast<std::uint32_t>(in_offsets_[v + 1] - in_offsets_[v]);
    }

    std::uint32_t degree(VertexId v) const { return out_degree(v); }

    bool has_edge(VertexId u, VertexId v) const {
        const auto nb = out_neighbors(u);
        return std::binary_search(nb.begin(), nb.end(), v);
    }

    /// Flat index of the i-th out-arc of v; keys per-edge attachment slots.
    std::uint64_t arc_index(VertexId v, std::size_t i) const { return offsets_[v] + i; }

    std::uint64_t original_id(VertexId v) const { return original_ids_[v]; }

    void serialize(std::ostream &out) const {
        out << "% " << (directed_ ? "directed" : "undirected") << " n=" << n_ << " m=" << m_
            << "\n";
        for (VertexId u = 0; u < n_; ++u) {
            for (VertexId v : out_neighbors(u)) {
                if (!directed_ && v < u)
                    continue; // each undirected edge once
                out << original_ids_[u] << ' ' << original_ids_[v] << '\n';
            }
        }
    }

private:
    VertexId n_ = 0;
    std::uint64_t m_ = 0;
    bool directed_;
    std::vector<std::uint64_t> offsets_;
    std::vector<VertexId> adjacency_;
    std::vector<std::uint64_t> in_offsets_;
    std::vector<VertexId> in_adjacency_;
    std::vector<std::uint64_t> original_ids_;
};

/// Parse the whitespace edge-list format: '%' or '#' start comment lines,
/// data lines hold two non-negative integers "u v". Ids need not be dense.
inline Graph load_edge_list(std::istream &in, bool directed) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos)
            continue;
        if (line[begin] == '%' || line[begin] == '#')
            continue;
        std::uint64_t ids[2];
        std::size_t pos = begin;
        for (int field = 0; field < 2; ++field) {
            if (field > 0) {
                pos = line.find_first_not_of(" \t\r", pos);
                if (pos == std::string::npos)
                    throw ParseError(lineno, "expected two fields, got one");
            }
            std::uint64_t value = 0;
            std::size_t digits = 0;
            while (pos < line.size() && line[pos] >= '0' && line[pos] <= '9') {
                value = value * 10 + (line[pos] - '0');
                ++pos;
                ++digits;
            }
            if (digits == 0)
                throw ParseError(lineno, "expected a non-negative integer");
            if (digits > 19)
                throw ParseError(lineno, "vertex id does not fit 64 bits");
            if (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r')
                throw ParseError(lineno, "malformed integer token");
            ids[field] = value;
        }
        if (line.find_first_not_of(" \t\r", pos) != std::string::npos)
            throw ParseError(lineno, "expected two fields, got more");
        edges.emplace_back(ids[0], ids[1]);
    }
    return Graph::from_edges(edges, directed);
}

/// Scale-free generator: start from a triangle, then connect each new
/// vertex to both endpoints of an edge chosen uniformly at random.
/// Produces m = 2n - 3 edges and is deterministic given the seed.
inline Graph generate_dorogovtsev_mendes(VertexId target_vertices, std::uint64_t seed) {
    if (target_vertices < 3)
        throw std::invalid_argument("generate_dorogovtsev_mendes: need at least 3 vertices");
    Rng rng(seed);
    std::vector<std::pair<VertexId, VertexId>> edges = {{0, 1}, {0, 2}, {1, 2}};
    edges.reserve(2 * static_cast<std::size_t>(target_vertices) - 3);
    for (VertexId v = 3; v < target_vertices; ++v) {
        const auto [a, b] = edges[rng.next_below(edges.size())];
        edges.emplace_back(a, v);
        edges.emplace_back(b, v);
    }
    return Graph::from_dense_edges(target_vertices, std::move(edges), false);
}

} // namespace graphsim
