#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "../dataflow.hpp"
#include "../gas.hpp"
#include "../graph.hpp"
#include "../graph_centric.hpp"
#include "../pregel.hpp"
#include "common.hpp"

// Community detection via label propagation: labels start as the id of a
// randomly selected neighbor, every round each vertex adopts the most
// frequent label among its neighbors, ties broken toward the minimum.
// Synchronous execution can oscillate (two neighbors swapping labels
// forever); that run ends at max_rounds with converged=false, which is a
// valid outcome. Asynchronous execution converges to a neighborhood
// fixpoint.

namespace graphsim::algo {

struct LpState {
    VertexId label = kNoVertex;

    friend bool operator==(const LpState &, const LpState &) = default;
};

struct CommunityResult {
    std::vector<VertexId> labels;
    bool converged = false;
    RunMetrics metrics;
};

struct CommunityOptions : EngineOptions {};

namespace detail {

struct PregelLpProgram {
    using State = LpState;
    using Message = VertexId;

    std::uint64_t seed;

    void register_aggregators(AggregatorBoard &board) const {
        board.register_aggregator("stable", AggKind::BoolAnd, false);
    }

    void compute(PregelVertex<State> &v, std::span<const Message> messages,
                 PregelContext<Message> &ctx) {
        if (ctx.superstep() == 0) {
            v.state().label = lp_initial_label_from(v.neighbors(), v.id(), seed);
            if (v.neighbors().empty()) {
                ctx.vote_to_halt();
                return;
            }
            ctx.aggregate("stable", false);
            ctx.send_to_all_neighbors(v.state().label);
            return;
        }
        std::map<VertexId, std::uint32_t> counts;
        for (Message m : messages)
            ++counts[m];
        const VertexId next = most_frequent_min_tie(counts);
        ctx.aggregate("stable", next == v.state().label);
        v.state().label = next;
        if (std::get<bool>(ctx.aggregator_value("stable")))
            ctx.vote_to_halt();
        else
            ctx.send_to_all_neighbors(v.state().label);
    }

    static VertexId lp_initial_label_from(std::span<const VertexId> neighbors, VertexId self,
                                          std::uint64_t seed) {
        if (neighbors.empty())
            return self;
        return neighbors[mix_hash(self, seed) % neighbors.size()];
    }
};

struct GasLpProgram {
    using State = LpState;
    using Gather = std::vector<std::pair<VertexId, std::uint32_t>>; // sorted label counts

    static constexpr EdgeDir gather_dir = EdgeDir::All;
    static constexpr EdgeDir scatter_dir = EdgeDir::All;
    static constexpr bool delta_correct = false;

    std::uint64_t seed;

    void init(const GasInitView &view, State &state) const {
        state.label = PregelLpProgram::lp_initial_label_from(view.neighbors(), view.id, seed);
    }

    std::uint64_t gather_read_bytes() const { return sizeof(VertexId); }

    Gather gather(const GasEdge<State> &edge) const {
        return {{edge.other_state().label, 1}};
    }

    Gather gather_sum(Gather a, Gather b) const {
        Gather out;
        out.reserve(a.size() + b.size());
        std::size_t i = 0, j = 0;
        while (i < a.size() || j < b.size()) {
            if (j == b.size() || (i < a.size() && a[i].first < b[j].first))
                out.push_back(a[i++]);
            else if (i == a.size() || b[j].first < a[i].first)
                out.push_back(b[j++]);
            else {
                out.emplace_back(a[i].first, a[i].second + b[j].second);
                ++i;
                ++j;
            }
        }
        return out;
    }

    void apply(GasApplyCtx<State> &ctx, const std::optional<Gather> &counts) const {
        if (!counts || counts->empty())
            return;
        VertexId best = kNoVertex;
        std::uint32_t best_count = 0;
        for (const auto &[label, count] : *counts)
            if (count > best_count) {
                best = label;
                best_count = count;
            }
        ctx.state().label = best;
    }

    void scatter(const GasEdge<State> &edge, GasScatterCtx<Gather> &ctx) const {
        if (ctx.changed())
            ctx.signal(edge.other_id());
    }
};

// Graph-centric: one sweep per superstep over the block's internal
// vertices, evaluated against the previous superstep's labels (buffered
// internally, shipped as (vertex, label) messages for boundary vertices).
// Using the synchronous rule keeps the labeling independent of the
// partitioning; block-local asynchrony would tie the result to the block
// layout.
class GraphCentricLpProgram {
public:
    using State = LpState;

    struct Message {
        VertexId vertex;
        VertexId label;
    };

    GraphCentricLpProgram(WorkerId blocks, std::uint64_t seed) : scratch_(blocks), seed_(seed) {}

    std::uint64_t message_bytes(const Message &) const { return 2 * sizeof(VertexId); }

    void compute(GraphCentricContext<State, Message> &ctx) {
        Scratch &s = scratch_[ctx.block_id()];
        const auto &block = ctx.block();
        const auto &internal = block.internal_vertices();

        if (ctx.superstep() == 0) {
            const auto &boundary = block.boundary_vertices();
            s.boundary_labels.assign(boundary.size(), kNoVertex);
            for (std::size_t i = 0; i < boundary.size(); ++i)
                s.boundary_labels[i] = boundary[i]; // fallback: own id
            s.prev.resize(internal.size());
            for (std::size_t i = 0; i < internal.size(); ++i) {
                const VertexId v = internal[i];
                const VertexId init =
                    PregelLpProgram::lp_initial_label_from(block.neighbors(v), v, seed_);
                ctx.mutable_state(v).label = init;
                s.prev[i] = init;
                announce(ctx, v, init);
            }
            return; // stay active for the first sweep
        }

        for (const auto &group : ctx.messages())
            for (const Message &m : group.messages)
                s.set_boundary_label(block, m.vertex, m.label);

        bool any_changed = false;
        std::vector<VertexId> next(internal.size());
        for (std::size_t i = 0; i < internal.size(); ++i) {
            const VertexId v = internal[i];
            const auto nb = block.neighbors(v);
            if (nb.empty()) {
                next[i] = s.prev[i];
                continue;
            }
            std::map<VertexId, std::uint32_t> counts;
            for (VertexId u : nb)
                ++counts[block.is_internal(u) ? s.prev_label(internal, u)
                                              : s.boundary_label(block, u)];
            next[i] = most_frequent_min_tie(counts);
        }
        for (std::size_t i = 0; i < internal.size(); ++i) {
            if (next[i] != s.prev[i]) {
                ctx.mutable_state(internal[i]).label = next[i];
                any_changed = true;
                announce(ctx, internal[i], next[i]);
            }
            s.prev[i] = next[i];
        }
        if (!any_changed)
            ctx.vote_to_halt();
    }

private:
    struct Scratch {
        std::vector<VertexId> prev; // previous superstep, parallel to internal
        std::vector<VertexId> boundary_labels;

        VertexId prev_label(const std::vector<VertexId> &internal, VertexId v) const {
            const auto it = std::lower_bound(internal.begin(), internal.end(), v);
            return prev[static_cast<std::size_t>(it - internal.begin())];
        }

        VertexId boundary_label(const BlockSubgraph &block, VertexId b) const {
            const auto &boundary = block.boundary_vertices();
            const auto it = std::lower_bound(boundary.begin(), boundary.end(), b);
            return boundary_labels[static_cast<std::size_t>(it - boundary.begin())];
        }

        void set_boundary_label(const BlockSubgraph &block, VertexId b, VertexId label) {
            const auto &boundary = block.boundary_vertices();
            const auto it = std::lower_bound(boundary.begin(), boundary.end(), b);
            if (it != boundary.end() && *it == b)
                boundary_labels[static_cast<std::size_t>(it - boundary.begin())] = label;
        }
    };

    void announce(GraphCentricContext<State, Message> &ctx, VertexId v, VertexId label) const {
        for (VertexId u : ctx.block().neighbors(v))
            if (!ctx.block().is_internal(u))
                ctx.send(u, Message{v, label});
    }

    std::vector<Scratch> scratch_;
    std::uint64_t seed_;
};

inline CommunityResult lp_pact(const Graph &graph, const CommunityOptions &opts) {
    namespace df = graphsim::dataflow;
    const VertexId n = graph.num_vertices();

    df::Dataset edges(df::Schema{{df::FieldType::Int, df::FieldType::Int}});
    for (VertexId u = 0; u < n; ++u)
        for (VertexId v : graph.neighbors(u))
            edges.append({static_cast<std::int64_t>(u), static_cast<std::int64_t>(v)});
    df::Dataset labels0(df::Schema{{df::FieldType::Int, df::FieldType::Int}});
    df::Dataset singletons(df::Schema{{df::FieldType::Int, df::FieldType::Int}});
    for (VertexId v = 0; v < n; ++v) {
        const auto init = static_cast<std::int64_t>(
            detail::PregelLpProgram::lp_initial_label_from(graph.neighbors(v), v, opts.seed));
        labels0.append({static_cast<std::int64_t>(v), init});
        if (graph.neighbors(v).empty())
            singletons.append({static_cast<std::int64_t>(v), static_cast<std::int64_t>(v)});
    }

    df::DataflowBuilder builder;
    const auto edges_src = builder.source("edges", edges.schema());
    const auto labels_src = builder.source("labels", labels0.schema());
    const auto singles_src = builder.source("singletons", singletons.schema());

    const auto result = builder.bulk_iteration(
        labels_src, opts.max_rounds, [&](df::DataflowBuilder &b, df::NodeId current) {
            const auto neighbor_labels = b.join(
                current, edges_src, {0}, {0}, df::Schema{{df::FieldType::Int, df::FieldType::Int}},
                [](const df::Tuple &label_row, const df::Tuple &edge_row, df::Emitter &emit) {
                    emit({edge_row[1], label_row[1]});
                });
            const auto ones =
                b.map(neighbor_labels,
                      df::Schema{{df::FieldType::Int, df::FieldType::Int, df::FieldType::Int}},
                      [](const df::Tuple &row, df::Emitter &emit) {
                          emit({row[0], row[1], static_cast<std::int64_t>(1)});
                      });
            const auto counts = b.group_aggregate(ones, {0, 1}, df::AggregateSpec::sum(2));
            // reduce to the most frequent label per vertex, minimum on ties
            const auto winners = b.group_aggregate(
                counts, {0},
                df::AggregateSpec::custom_reduce(
                    df::Schema{{df::FieldType::Int}},
                    [](const std::vector<df::Tuple> &rows, df::Emitter &emit) {
                        std::int64_t best = 0, best_count = -1;
                        std::vector<std::pair<std::int64_t, std::int64_t>> sorted;
                        for (const auto &row : rows)
                            sorted.emplace_back(std::get<std::int64_t>(row[1]),
                                                std::get<std::int64_t>(row[2]));
                        std::sort(sorted.begin(), sorted.end());
                        for (const auto &[label, count] : sorted)
                            if (count > best_count) {
                                best = label;
                                best_count = count;
                            }
                        emit({rows.front()[0], best});
                    }));
            return b.union_of(winners, singles_src);
        });

    auto flow = std::move(builder).build();
    auto run = df::execute_dag(
        flow, result, {{"edges", edges}, {"labels", labels0}, {"singletons", singletons}},
        std::max<unsigned>(1, opts.workers));

    CommunityResult out;
    out.labels.assign(n, kNoVertex);
    for (const auto &row : run.output.rows())
        out.labels[static_cast<VertexId>(std::get<std::int64_t>(row[0]))] =
            static_cast<VertexId>(std::get<std::int64_t>(row[1]));
    out.converged = !run.metrics.max_steps_exhausted;
    out.metrics = std::move(run.metrics);
    return out;
}

} // namespace detail

inline CommunityResult community_detection_lp(const Graph &graph, Engine engine,
                                              const CommunityOptions &opts = {}) {
    if (graph.directed())
        throw std::invalid_argument("community_detection_lp: undirected graphs only");
    const auto assignment = resolve_assignment(graph, opts);

    switch (engine) {
    case Engine::Pregel: {
        detail::PregelLpProgram program{opts.seed};
        PregelOptions popts;
        popts.max_supersteps = opts.max_rounds;
        popts.parallel = opts.parallel;
        auto run = run_pregel(graph, assignment, program, popts);
        CommunityResult out;
        for (const auto &s : run.states)
            out.labels.push_back(s.label);
        out.converged = !run.metrics.max_steps_exhausted;
        out.metrics = std::move(run.metrics);
        return out;
    }
    case Engine::GasSync: {
        detail::GasLpProgram program{opts.seed};
        GasOptions gopts;
        gopts.max_iterations = opts.max_rounds;
        gopts.parallel = opts.parallel;
        auto run = run_gas_sync(graph, assignment, program, gopts);
        CommunityResult out;
        for (const auto &s : run.states)
            out.labels.push_back(s.label);
        out.converged = !run.metrics.max_steps_exhausted;
        out.metrics = std::move(run.metrics);
        return out;
    }
    case Engine::GasAsync: {
        detail::GasLpProgram program{opts.seed};
        GasAsyncOptions gopts;
        gopts.seed = opts.seed;
        gopts.parallel = opts.parallel;
        auto run = run_gas_async(graph, assignment, program, gopts);
        CommunityResult out;
        for (const auto &s : run.states)
            out.labels.push_back(s.label);
        out.converged = !run.metrics.max_steps_exhausted;
        out.metrics = std::move(run.metrics);
        return out;
    }
    case Engine::GraphCentric: {
        detail::GraphCentricLpProgram program(assignment.k, opts.seed);
        GraphCentricOptions gopts;
        gopts.max_supersteps = opts.max_rounds;
        gopts.parallel = opts.parallel;
        auto run = run_graph_centric(graph, assignment, program, gopts);
        CommunityResult out;
        for (const auto &s : run.states)
            out.labels.push_back(s.label);
        out.converged = !run.metrics.max_steps_exhausted;
        out.metrics = std::move(run.metrics);
        return out;
    }
    case Engine::Pact:
        return detail::lp_pact(graph, opts);
    case Engine::GasMessage:
        throw std::invalid_argument(
            "community_detection_lp: no gas-message variant; use gas-sync or gas-async");
    }
    throw std::invalid_argument("community_detection_lp: unknown engine");
}

} // namespace graphsim::algo
