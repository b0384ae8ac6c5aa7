#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aggregator.hpp"
#include "checkpoint.hpp"
#include "common.hpp"
#include "graph.hpp"
#include "message.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "partition.hpp"

namespace graphsim {

// Bulk-synchronous vertex-centric execution. A program provides:
//
//   using State   = ...;   // per-vertex state, equality-comparable
//   using Message = ...;
//   void compute(PregelVertex<State> &, std::span<const Message>,
//                PregelContext<Message> &);
//
// and may additionally provide:
//
//   CombinerFn<Message> combiner() const;
//   std::uint64_t message_bytes(const Message &) const;
//   void register_aggregators(AggregatorBoard &) const;
//   void master_compute(PregelMasterContext &);
//
// compute may read and write only its own vertex state; messages sent in
// superstep s are visible in s+1; a vertex that voted to halt is
// reactivated exactly when it receives a message.

template <typename State>
class PregelVertex {
public:
    PregelVertex(VertexId id, State &state, const Graph &graph)
        : id_(id), state_(&state), graph_(&graph) {}

    VertexId id() const { return id_; }
    State &state() { return *state_; }
    const State &state() const { return *state_; }

    /// Out-neighbors for directed graphs, all neighbors otherwise.
    std::span<const VertexId> neighbors() const { return graph_->out_neighbors(id_); }

    std::uint32_t num_edges() const { return graph_->out_degree(id_); }
    std::uint32_t degree() const { return graph_->degree(id_); }

private:
    VertexId id_;
    State *state_;
    const Graph *graph_;
};

template <typename Message>
class PregelContext {
public:
    PregelContext(const Graph &graph, const AggregatorBoard &board,
                  AggregatorBoard::Partials &partials, Outbox<Message> &outbox,
                  std::vector<std::uint8_t> &halted, std::uint64_t superstep)
        : graph_(&graph), board_(&board), partials_(&partials), outbox_(&outbox),
          halted_(&halted), superstep_(superstep) {}

    void bind(VertexId v) { vertex_ = v; }

    std::uint64_t superstep() const { return superstep_; }
    std::uint64_t num_vertices() const { return graph_->num_vertices(); }

    void send(VertexId dst, Message payload) { outbox_->send(dst, std::move(payload)); }

    void send_to_all_neighbors(const Message &payload) {
        for (VertexId u : graph_->out_neighbors(vertex_))
            outbox_->send(u, payload);
    }

    void vote_to_halt() { (*halted_)[vertex_] = 1; }

    /// Value committed at the previous superstep's barrier.
    const AggValue &aggregator_value(const std::string &name) const {
        return board_->value(name);
    }

    void aggregate(const std::string &name, const AggValue &value) {
        board_->contribute(*partials_, name, value);
    }

private:
    const Graph *graph_;
    const AggregatorBoard *board_;
    AggregatorBoard::Partials *partials_;
    Outbox<Message> *outbox_;
    std::vector<std::uint8_t> *halted_;
    std::uint64_t superstep_ = 0;
    VertexId vertex_ = 0;
};

/// Runs between supersteps, after aggregator commit.
class PregelMasterContext {
public:
    PregelMasterContext(AggregatorBoard &board, std::uint64_t superstep,
                        std::uint64_t num_vertices)
        : board_(&board), superstep_(superstep), num_vertices_(num_vertices) {}

    /// The superstep that just finished.
    std::uint64_t superstep() const { return superstep_; }
    std::uint64_t num_vertices() const { return num_vertices_; }

    const AggValue &aggregator_value(const std::string &name) const { return board_->value(name); }
    void set_aggregator(const std::string &name, AggValue v) { board_->set_value(name, v); }

    void halt() { halt_requested_ = true; }
    bool halt_requested() const { return halt_requested_; }

private:
    AggregatorBoard *board_;
    std::uint64_t superstep_;
    std::uint64_t num_vertices_;
    bool halt_requested_ = false;
};

struct PregelOptions {
    std::uint64_t max_supersteps = 10000;
    bool parallel = false;
    std::uint64_t checkpoint_interval = 0; // supersteps between checkpoints, 0 = off
    std::filesystem::path checkpoint_dir;
    std::string checkpoint_tag = "pregel";
    bool strict_checkpoint = false; // escalate checkpoint write failures
    std::int64_t kill_at_superstep = -1; // test hook: lose state once at this superstep
};

template <typename State>
struct PregelResult {
    std::vector<State> states;
    RunMetrics metrics;
    std::map<std::string, AggValue> aggregators;
};

template <typename Program>
PregelResult<typename Program::State> run_pregel(const Graph &graph,
                                                 const PartitionAssignment &assignment,
                                                 Program &program, const PregelOptions &opts = {}) {
    using State = typename Program::State;
    using Message = typename Program::Message;

    const auto start = std::chrono::steady_clock::now();
    const VertexId n = graph.num_vertices();
    const WorkerId k = assignment.k;

    std::vector<State> states(n);
    std::vector<std::uint8_t> halted(n, 0);
    std::vector<std::vector<Message>> inboxes(n);
    RunMetrics metrics;

    AggregatorBoard board;
    if constexpr (requires { program.register_aggregators(board); })
        program.register_aggregators(board);

    std::optional<CombinerFn<Message>> combiner;
    if constexpr (requires { program.combiner(); }) {
        // an empty function disables combining (programs may make it a
        // runtime choice)
        if (auto fn = program.combiner())
            combiner = std::move(fn);
    }

    PayloadSizeFn<Message> payload_size;
    if constexpr (requires { program.message_bytes(std::declval<const Message &>()); })
        payload_size = [&program](const Message &m) { return program.message_bytes(m); };
    else
        payload_size = [](const Message &m) { return default_payload_size(m); };

    std::vector<std::vector<VertexId>> worker_vertices(k);
    for (VertexId v = 0; v < n; ++v)
        worker_vertices[assignment.owner_of(v)].push_back(v);

    const auto serialize_run = [&](std::uint64_t next_superstep) {
        CheckpointFile file;
        file.engine_tag = opts.checkpoint_tag;
        file.superstep = next_superstep;
        ByteWriter ws;
        ws.put_u64(n);
        for (const State &s : states)
            Codec<State>::encode(ws, s);
        file.add_section("states", ws.take());
        ByteWriter wh;
        wh.put_bytes(halted.data(), halted.size());
        file.add_section("halted", wh.take());
        ByteWriter wi;
        for (VertexId v = 0; v < n; ++v)
            Codec<std::vector<Message>>::encode(wi, inboxes[v]);
        file.add_section("inboxes", wi.take());
        ByteWriter wa;
        const auto agg = board.snapshot();
        wa.put_u64(agg.size());
        for (const auto &[name, value] : agg) {
            wa.put_string(name);
            encode_agg_value(wa, value);
        }
        file.add_section("aggregators", wa.take());
        ByteWriter wm;
        wm.put_u64(metrics.supersteps);
        wm.put_u64(metrics.messages_sent);
        wm.put_u64(metrics.messages_delivered);
        wm.put_u64(metrics.messages_local);
        wm.put_u64(metrics.messages_remote);
        wm.put_u64(metrics.payload_bytes);
        wm.put_u64(metrics.vertex_updates);
        wm.put_u64(metrics.init_updates);
        wm.put_u64(metrics.active_vertices_per_superstep.size());
        for (std::uint64_t a : metrics.active_vertices_per_superstep)
            wm.put_u64(a);
        file.add_section("metrics", wm.take());
        return file;
    };

    const auto restore_run = [&](const CheckpointFile &file) -> std::uint64_t {
        ByteReader rs(file.section("states"));
        if (rs.get_u64() != n)
            throw CheckpointError("checkpoint vertex count mismatch");
        for (VertexId v = 0; v < n; ++v)
            states[v] = Codec<State>::decode(rs);
        ByteReader rh(file.section("halted"));
        rh.get_bytes(halted.data(), halted.size());
        ByteReader ri(file.section("inboxes"));
        for (VertexId v = 0; v < n; ++v)
            inboxes[v] = Codec<std::vector<Message>>::decode(ri);
        ByteReader ra(file.section("aggregators"));
        std::map<std::string, AggValue> agg;
        const std::uint64_t count = ra.get_u64();
        for (std::uint64_t i = 0; i < count; ++i) {
            std::string name = ra.get_string();
            agg[name] = decode_agg_value(ra);
        }
        board.restore_snapshot(agg);
        ByteReader rm(file.section("metrics"));
        metrics.supersteps = rm.get_u64();
        metrics.messages_sent = rm.get_u64();
        metrics.messages_delivered = rm.get_u64();
        metrics.messages_local = rm.get_u64();
        metrics.messages_remote = rm.get_u64();
        metrics.payload_bytes = rm.get_u64();
        metrics.vertex_updates = rm.get_u64();
        metrics.init_updates = rm.get_u64();
        metrics.active_vertices_per_superstep.assign(rm.get_u64(), 0);
        for (auto &a : metrics.active_vertices_per_superstep)
            a = rm.get_u64();
        return file.superstep;
    };

    std::filesystem::path last_checkpoint;
    bool killed = false;
    std::uint64_t superstep = 0;

    while (true) {
        if (opts.kill_at_superstep >= 0 && !killed &&
            superstep == static_cast<std::uint64_t>(opts.kill_at_superstep)) {
            // Simulated worker failure: all in-memory run state is lost and
            // the last checkpoint (if any) is loaded back from disk.
            killed = true;
            if (!last_checkpoint.empty()) {
                superstep =
                    restore_run(CheckpointFile::read(last_checkpoint, opts.checkpoint_tag));
            } else {
                states.assign(n, State{});
                halted.assign(n, 0);
                inboxes.assign(n, {});
                metrics = RunMetrics{};
                AggregatorBoard fresh;
                if constexpr (requires { program.register_aggregators(fresh); })
                    program.register_aggregators(fresh);
                board = std::move(fresh);
                superstep = 0;
            }
        }

        bool any_active = false;
        for (VertexId v = 0; v < n && !any_active; ++v)
            any_active = !halted[v] || !inboxes[v].empty();
        if (!any_active)
            break;
        if (superstep >= opts.max_supersteps) {
            metrics.max_steps_exhausted = true;
            metrics.converged = false;
            break;
        }

        std::vector<Outbox<Message>> outboxes;
        outboxes.reserve(k);
        for (WorkerId w = 0; w < k; ++w)
            outboxes.emplace_back(w);
        std::vector<AggregatorBoard::Partials> partials;
        partials.reserve(k);
        for (WorkerId w = 0; w < k; ++w)
            partials.push_back(board.make_partials());
        std::vector<std::uint64_t> updates(k, 0), actives(k, 0);

        run_workers(k, opts.parallel, [&](WorkerId w) {
            PregelContext<Message> ctx(graph, board, partials[w], outboxes[w], halted, superstep);
            for (VertexId v : worker_vertices[w]) {
                const bool has_messages = !inboxes[v].empty();
                if (halted[v] && !has_messages)
                    continue;
                halted[v] = 0; // a message reactivates a halted vertex
                ctx.bind(v);
                PregelVertex<State> vertex(v, states[v], graph);
                const State before = states[v];
                program.compute(vertex, std::span<const Message>(inboxes[v]), ctx);
                if (!(states[v] == before))
                    ++updates[w];
                ++actives[w];
                inboxes[v].clear();
            }
        });

        std::uint64_t active_total = 0;
        for (WorkerId w = 0; w < k; ++w) {
            metrics.vertex_updates += updates[w];
            active_total += actives[w];
        }
        metrics.active_vertices_per_superstep.push_back(active_total);

        exchange(outboxes, assignment, combiner, inboxes, metrics, payload_size);
        board.commit(partials);

        bool master_halt = false;
        if constexpr (requires(PregelMasterContext & m) { program.master_compute(m); }) {
            PregelMasterContext mctx(board, superstep, n);
            program.master_compute(mctx);
            master_halt = mctx.halt_requested();
        }

        ++metrics.supersteps;
        ++superstep;

        if (opts.checkpoint_interval > 0 && superstep % opts.checkpoint_interval == 0) {
            const auto path =
                opts.checkpoint_dir / ("checkpoint_" + std::to_string(superstep) + ".ckpt");
            try {
                serialize_run(superstep).write(path);
                last_checkpoint = path;
            } catch (const CheckpointError &) {
                if (opts.strict_checkpoint)
                    throw; // best-effort by default
            }
        }

        if (master_halt)
            break;
    }

    metrics.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(states), std::move(metrics), board.snapshot()};
}

} // namespace graphsim
