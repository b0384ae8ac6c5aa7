#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "../common.hpp"
#include "../graph.hpp"
#include "../partition.hpp"

namespace graphsim::algo {

enum class Engine { Pregel, GasSync, GasAsync, GasMessage, GraphCentric, Pact };

inline const char *engine_name(Engine e) {
    switch (e) {
    case Engine::Pregel:
        return "pregel";
    case Engine::GasSync:
        return "gas-sync";
    case Engine::GasAsync:
        return "gas-async";
    case Engine::GasMessage:
        return "gas-message";
    case Engine::GraphCentric:
        return "graph-centric";
    case Engine::Pact:
        return "pact";
    }
    return "?";
}

inline bool parse_engine(const std::string &name, Engine &out) {
    for (Engine e : {Engine::Pregel, Engine::GasSync, Engine::GasAsync, Engine::GasMessage,
                     Engine::GraphCentric, Engine::Pact})
        if (name == engine_name(e)) {
            out = e;
            return true;
        }
    return false;
}

/// Most frequent value, ties broken by preferring the minimum label.
inline VertexId most_frequent_min_tie(const std::map<VertexId, std::uint32_t> &counts) {
    VertexId best = kNoVertex;
    std::uint32_t best_count = 0;
    for (const auto &[label, count] : counts) // ascending keys: ties keep the minimum
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    return best;
}

// Order-independent checksums over per-vertex outputs, so results can be
// compared across engines and worker counts from the CLI alone.

inline std::uint64_t checksum_fold(std::uint64_t acc, VertexId v, std::uint64_t value_bits) {
    return acc + splitmix64(splitmix64(static_cast<std::uint64_t>(v) + 1) ^ value_bits);
}

inline std::uint64_t result_checksum(std::span<const VertexId> values) {
    std::uint64_t acc = 0;
    for (VertexId v = 0; v < values.size(); ++v)
        acc = checksum_fold(acc, v, values[v]);
    return acc;
}

inline std::uint64_t result_checksum(std::span<const double> values) {
    std::uint64_t acc = 0;
    for (VertexId v = 0; v < values.size(); ++v)
        acc = checksum_fold(acc, v, std::bit_cast<std::uint64_t>(values[v]));
    return acc;
}

template <typename T>
void write_vertex_values(std::ostream &out, std::span<const T> values) {
    for (VertexId v = 0; v < values.size(); ++v)
        out << v << '\t' << values[v] << '\n';
}

inline void write_scalar(std::ostream &out, const std::string &key, const std::string &value) {
    out << key << '=' << value << '\n';
}

/// Shared knobs for running an algorithm on an engine.
struct EngineOptions {
    WorkerId workers = 1;
    std::uint64_t seed = 0;
    bool parallel = false;
    std::uint64_t max_rounds = 10000;
    const PartitionAssignment *assignment = nullptr; // overrides hash partitioning
};

inline PartitionAssignment resolve_assignment(const Graph &graph, const EngineOptions &opts) {
    if (opts.assignment)
        return *opts.assignment;
    return partition_hash(graph, opts.workers, opts.seed);
}

} // namespace graphsim::algo
