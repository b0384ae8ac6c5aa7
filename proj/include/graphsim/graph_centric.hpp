#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aggregator.hpp"
#include "common.hpp"
#include "graph.hpp"
#include "message.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "partition.hpp"

namespace graphsim {

// Block-level execution in the style of a graph-centric framework: the
// program's compute runs once per active block per superstep, may read
// internal and boundary vertex data, but may write internal vertices only.
// Writes are immediately visible within the same compute call (local
// asynchrony); boundary values are a snapshot of the previous superstep,
// and a first read of a boundary value in a superstep is counted as one
// remote message. Updates cross blocks by sending messages, which are
// delivered to the owning block at the next superstep, grouped by target
// vertex.
//
// A block program provides:
//
//   using State = ...; using Message = ...;
//   void compute(GraphCentricContext<State, Message> &);
//
// and optionally combiner(), message_bytes(), register_aggregators().

template <typename State, typename Message>
class GraphCentricContext {
public:
    struct VertexMessages {
        VertexId target;
        std::span<const Message> messages;
    };

    GraphCentricContext(const Graph &graph, const BlockSubgraph &block, std::vector<State> &states,
                        const std::vector<State> &boundary_snapshot,
                        std::vector<std::uint8_t> &boundary_read, Outbox<Message> &outbox,
                        std::vector<std::uint8_t> &halted_blocks, const AggregatorBoard &board,
                        AggregatorBoard::Partials &partials, std::uint64_t superstep,
                        std::uint64_t boundary_read_bytes, RunMetrics &counters)
        : graph_(&graph), block_(&block), states_(&states),
          boundary_snapshot_(&boundary_snapshot), boundary_read_(&boundary_read),
          outbox_(&outbox), halted_blocks_(&halted_blocks), board_(&board), partials_(&partials),
          superstep_(superstep), boundary_read_bytes_(boundary_read_bytes), counters_(&counters) {}

    std::uint64_t superstep() const { return superstep_; }
    std::uint64_t num_vertices() const { return graph_->num_vertices(); }
    const BlockSubgraph &block() const { return *block_; }
    WorkerId block_id() const { return block_->block_id(); }

    const State &state(VertexId v) const {
        if (block_->is_internal(v))
            return (*states_)[v];
        const auto &boundary = block_->boundary_vertices();
        const auto it = std::lower_bound(boundary.begin(), boundary.end(), v);
        if (it == boundary.end() || *it != v)
            throw ContractViolation("block " + std::to_string(block_id()) +
                                    " read vertex outside its subgraph: " + std::to_string(v));
        const auto idx = static_cast<std::size_t>(it - boundary.begin());
        if (!(*boundary_read_)[idx]) {
            (*boundary_read_)[idx] = 1;
            ++counters_->messages_sent;
            ++counters_->messages_delivered;
            ++counters_->messages_remote;
            counters_->payload_bytes += boundary_read_bytes_;
        }
        return (*boundary_snapshot_)[idx];
    }

    State &mutable_state(VertexId v) {
        if (!block_->is_internal(v))
            throw ContractViolation("block " + std::to_string(block_id()) +
                                    " attempted to write non-internal vertex " +
                                    std::to_string(v));
        if (!written_.count(v))
            written_.emplace(v, (*states_)[v]);
        return (*states_)[v];
    }

    const std::vector<VertexMessages> &messages() const { return messages_; }

    void send(VertexId dst, Message payload) { outbox_->send(dst, std::move(payload)); }

    void vote_to_halt() { (*halted_blocks_)[block_id()] = 1; }

    const AggValue &aggregator_value(const std::string &name) const { return board_->value(name); }

    void aggregate(const std::string &name, const AggValue &value) {
        board_->contribute(*partials_, name, value);
    }

    // engine side
    void set_messages(std::vector<VertexMessages> msgs) { messages_ = std::move(msgs); }

    std::uint64_t count_changed() const {
        std::uint64_t changed = 0;
        for (const auto &[v, before] : written_)
            if (!((*states_)[v] == before))
                ++changed;
        return changed;
    }

private:
    const Graph *graph_;
    const BlockSubgraph *block_;
    std::vector<State> *states_;
    const std::vector<State> *boundary_snapshot_;
    std::vector<std::uint8_t> *boundary_read_;
    Outbox<Message> *outbox_;
    std::vector<std::uint8_t> *halted_blocks_;
    const AggregatorBoard *board_;
    AggregatorBoard::Partials *partials_;
    std::uint64_t superstep_;
    std::uint64_t boundary_read_bytes_;
    RunMetrics *counters_;
    std::vector<VertexMessages> messages_;
    std::map<VertexId, State> written_;
};

struct GraphCentricOptions {
    std::uint64_t max_supersteps = 10000;
    bool parallel = false;
};

template <typename State>
struct GraphCentricResult {
    std::vector<State> states;
    RunMetrics metrics;
    std::map<std::string, AggValue> aggregators;
};

template <typename Program>
GraphCentricResult<typename Program::State>
run_graph_centric(const Graph &graph, const PartitionAssignment &assignment, Program &program,
                  const GraphCentricOptions &opts = {}) {
    using State = typename Program::State;
    using Message = typename Program::Message;

    const auto start = std::chrono::steady_clock::now();
    const VertexId n = graph.num_vertices();
    const WorkerId k = assignment.k;

    std::vector<BlockSubgraph> blocks;
    blocks.reserve(k);
    for (WorkerId b = 0; b < k; ++b)
        blocks.emplace_back(graph, assignment, b);

    std::vector<State> states(n);
    std::vector<std::vector<Message>> inboxes(n);
    std::vector<std::uint8_t> halted(k, 0);
    RunMetrics metrics;

    AggregatorBoard board;
    if constexpr (requires { program.register_aggregators(board); })
        program.register_aggregators(board);

    std::optional<CombinerFn<Message>> combiner;
    if constexpr (requires { program.combiner(); }) {
        if (auto fn = program.combiner())
            combiner = std::move(fn);
    }

    PayloadSizeFn<Message> payload_size;
    if constexpr (requires { program.message_bytes(std::declval<const Message &>()); })
        payload_size = [&program](const Message &m) { return program.message_bytes(m); };
    else
        payload_size = [](const Message &m) { return default_payload_size(m); };

    std::uint64_t boundary_read_bytes = sizeof(State);
    if constexpr (requires { program.boundary_read_bytes(); })
        boundary_read_bytes = program.boundary_read_bytes();

    std::uint64_t superstep = 0;
    for (;;) {
        std::vector<std::uint8_t> has_messages(k, 0);
        for (VertexId v = 0; v < n; ++v)
            if (!inboxes[v].empty())
                has_messages[assignment.owner_of(v)] = 1;

        std::vector<WorkerId> active_blocks;
        for (WorkerId b = 0; b < k; ++b)
            if (!halted[b] || has_messages[b]) {
                halted[b] = 0; // a message reactivates a halted block
                active_blocks.push_back(b);
            }
        if (active_blocks.empty())
            break;
        if (superstep >= opts.max_supersteps) {
            metrics.max_steps_exhausted = true;
            metrics.converged = false;
            break;
        }

        // Boundary snapshots for all active blocks, taken before any block
        // computes, so no same-superstep write can leak across blocks.
        std::vector<std::vector<State>> snapshots(k);
        for (WorkerId b : active_blocks) {
            const auto &boundary = blocks[b].boundary_vertices();
            snapshots[b].reserve(boundary.size());
            for (VertexId v : boundary)
                snapshots[b].push_back(states[v]);
        }

        std::vector<Outbox<Message>> outboxes;
        outboxes.reserve(k);
        for (WorkerId b = 0; b < k; ++b)
            outboxes.emplace_back(b);
        std::vector<AggregatorBoard::Partials> partials;
        partials.reserve(k);
        for (WorkerId b = 0; b < k; ++b)
            partials.push_back(board.make_partials());
        std::vector<RunMetrics> counters(k);
        std::vector<std::uint64_t> updates(k, 0);
        std::vector<std::uint8_t> is_active(k, 0);
        for (WorkerId b : active_blocks)
            is_active[b] = 1;

        run_workers(k, opts.parallel, [&](WorkerId b) {
            if (!is_active[b])
                return;
            std::vector<std::uint8_t> boundary_read(blocks[b].boundary_vertices().size(), 0);
            GraphCentricContext<State, Message> ctx(graph, blocks[b], states, snapshots[b],
                                                    boundary_read, outboxes[b], halted, board,
                                                    partials[b], superstep, boundary_read_bytes,
                                                    counters[b]);
            std::vector<typename GraphCentricContext<State, Message>::VertexMessages> grouped;
            for (VertexId v : blocks[b].internal_vertices())
                if (!inboxes[v].empty())
                    grouped.push_back({v, std::span<const Message>(inboxes[v])});
            ctx.set_messages(std::move(grouped));
            program.compute(ctx);
            updates[b] = ctx.count_changed();
        });

        for (WorkerId b : active_blocks)
            for (VertexId v : blocks[b].internal_vertices())
                inboxes[v].clear();

        for (WorkerId b = 0; b < k; ++b) {
            metrics.merge_counters(counters[b]);
            metrics.vertex_updates += updates[b];
        }
        metrics.active_vertices_per_superstep.push_back(active_blocks.size());

        exchange(outboxes, assignment, combiner, inboxes, metrics, payload_size);
        board.commit(partials);
        ++metrics.supersteps;
        ++superstep;
    }

    metrics.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(states), std::move(metrics), board.snapshot()};
}

} // namespace graphsim
