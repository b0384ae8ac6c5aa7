#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "common.hpp"
#include "graph.hpp"

namespace graphsim {

/// Vertex -> worker-block map. Every vertex has exactly one owner in
/// 0..k-1; blocks may be empty.
struct PartitionAssignment {
    WorkerId k = 1;
    std::vector<WorkerId> owner;

    WorkerId owner_of(VertexId v) const { return owner[v]; }

    static PartitionAssignment from_owner(std::vector<WorkerId> owner, WorkerId k) {
        if (k == 0)
            throw std::invalid_argument("PartitionAssignment: k must be positive");
        for (WorkerId w : owner)
            if (w >= k)
                throw std::invalid_argument("PartitionAssignment: owner out of range");
        return {k, std::move(owner)};
    }

    /// Contiguous ranges of near-equal size; used by block-level programs
    /// and tests that need locality.
    static PartitionAssignment contiguous(VertexId n, WorkerId k) {
        if (k == 0)
            throw std::invalid_argument("PartitionAssignment: k must be positive");
        std::vector<WorkerId> owner(n);
        for (VertexId v = 0; v < n; ++v)
            owner[v] = static_cast<WorkerId>((static_cast<std::uint64_t>(v) * k) / std::max<VertexId>(n, 1));
        return {k, std::move(owner)};
    }

    std::vector<std::uint64_t> block_sizes() const {
        std::vector<std::uint64_t> sizes(k, 0);
        for (WorkerId w : owner)
            ++sizes[w];
        return sizes;
    }
};

/// owner(v) = H(v, seed) mod k with a fixed integer hash; stable across
/// runs and platforms.
inline PartitionAssignment partition_hash(const Graph &graph, WorkerId k, std::uint64_t seed) {
    if (k == 0)
        throw std::invalid_argument("partition_hash: k must be positive");
    std::vector<WorkerId> owner(graph.num_vertices());
    for (VertexId v = 0; v < graph.num_vertices(); ++v)
        owner[v] = static_cast<WorkerId>(mix_hash(v, seed) % k);
    return {k, std::move(owner)};
}

/// One block's view of the graph: the vertices it owns (internal), the
/// non-owned vertices adjacent to them (boundary), and the adjacency
/// restricted to edges with at least one internal endpoint.
class BlockSubgraph {
public:
    BlockSubgraph(const Graph &graph, const PartitionAssignment &assignment, WorkerId block)
        : block_(block) {
        if (block >= assignment.k)
            throw std::invalid_argument("BlockSubgraph: block id out of range");
        const VertexId n = graph.num_vertices();
        for (VertexId v = 0; v < n; ++v)
            if (assignment.owner_of(v) == block)
                internal_.push_back(v);
        std::vector<bool> is_internal(n, false);
        for (VertexId v : internal_)
            is_internal[v] = true;
        std::vector<bool> seen(n, false);
        for (VertexId v : internal_) {
            for (VertexId u : graph.out_neighbors(v))
                if (!is_internal[u] && !seen[u]) {
                    seen[u] = true;
                    boundary_.push_back(u);
                }
            if (graph.directed())
                for (VertexId u : graph.in_neighbors(v))
                    if (!is_internal[u] && !seen[u]) {
                        seen[u] = true;
                        boundary_.push_back(u);
                    }
        }
        std::sort(boundary_.begin(), boundary_.end());

        for (VertexId v : internal_) {
            adjacency_.emplace(v, std::vector<VertexId>(graph.out_neighbors(v).begin(),
                                                        graph.out_neighbors(v).end()));
            if (graph.directed())
                in_adjacency_.emplace(v, std::vector<VertexId>(graph.in_neighbors(v).begin(),
                                                               graph.in_neighbors(v).end()));
        }
        for (VertexId b : boundary_) {
            std::vector<VertexId> outs;
            for (VertexId u : graph.out_neighbors(b))
                if (is_internal[u])
                    outs.push_back(u);
            adjacency_.emplace(b, std::move(outs));
            if (graph.directed()) {
                std::vector<VertexId> ins;
                for (VertexId u : graph.in_neighbors(b))
                    if (is_internal[u])
                        ins.push_back(u);
                in_adjacency_.emplace(b, std::move(ins));
            }
        }
    }

    WorkerId block_id() const { return block_; }
    const std::vector<VertexId> &internal_vertices() const { return internal_; }
    const std::vector<VertexId> &boundary_vertices() const { return boundary_; }

    bool is_internal(VertexId v) const {
        return std::binary_search(internal_.begin(), internal_.end(), v);
    }

    bool is_boundary(VertexId v) const {
        return std::binary_search(boundary_.begin(), boundary_.end(), v);
    }

    bool contains(VertexId v) const { return is_internal(v) || is_boundary(v); }

    /// Out-neighbors within the subgraph. For boundary vertices only the
    /// internal-side edges are visible.
    std::span<const VertexId> out_neighbors(VertexId v) const {
        const auto it = adjacency_.find(v);
        if (it == adjacency_.end())
            throw std::invalid_argument("BlockSubgraph: vertex not in subgraph");
        return it->second;
    }

    std::span<const VertexId> in_neighbors(VertexId v) const {
        if (in_adjacency_.empty())
            return out_neighbors(v);
        const auto it = in_adjacency_.find(v);
        if (it == in_adjacency_.end())
            throw std::invalid_argument("BlockSubgraph: vertex not in subgraph");
        return it->second;
    }

    std::span<const VertexId> neighbors(VertexId v) const { return out_neighbors(v); }

private:
    WorkerId block_;
    std::vector<VertexId> internal_;
    std::vector<VertexId> boundary_;
    std::unordered_map<VertexId, std::vector<VertexId>> adjacency_;
    std::unordered_map<VertexId, std::vector<VertexId>> in_adjacency_;
};

inline BlockSubgraph build_block_subgraph(const Graph &graph,
                                          const PartitionAssignment &assignment, WorkerId block) {
    return BlockSubgraph(graph, assignment, block);
}

} // namespace graphsim
