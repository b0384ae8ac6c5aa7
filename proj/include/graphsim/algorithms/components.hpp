#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "../dataflow.hpp"
#include "../gas.hpp"
#include "../graph.hpp"
#include "../graph_centric.hpp"
#include "../pregel.hpp"
#include "common.hpp"

// Connected components via min-label propagation, in every programming
// model. All variants converge to label(v) = min vertex id in v's
// component.

namespace graphsim::algo {

struct CcState {
    VertexId component = kNoVertex;

    friend bool operator==(const CcState &, const CcState &) = default;
};

struct CcResult {
    std::vector<VertexId> labels;
    RunMetrics metrics;
    std::vector<VertexId> apply_log; // async engine, when logging is on
};

struct CcOptions : EngineOptions {
    bool delta_caching = false;            // gas-sync
    bool verify_cache = false;             // gas-sync, with delta_caching
    std::vector<VertexId> async_order;     // gas-async initial queue override
    bool async_shuffle = false;            // gas-async: shuffle initial queue by seed
    bool log_applies = false;              // gas-async
    std::uint64_t checkpoint_interval = 0; // pregel
    std::filesystem::path checkpoint_dir;  // pregel
    std::int64_t kill_at_superstep = -1;   // pregel fault-injection hook
};

namespace detail {

// Pregel: initialize with the own id, apply the minimum incoming label,
// notify neighbors on change.
struct PregelCcProgram {
    using State = CcState;
    using Message = VertexId;

    void compute(PregelVertex<State> &v, std::span<const Message> messages,
                 PregelContext<Message> &ctx) {
        bool changed = false;
        if (ctx.superstep() == 0) {
            v.state().component = v.id();
            changed = true;
        } else {
            VertexId min_msg = kNoVertex;
            for (Message m : messages)
                min_msg = std::min(min_msg, m);
            if (min_msg < v.state().component) {
                // found smaller component
                changed = true;
                v.state().component = min_msg;
            }
        }
        if (changed)
            ctx.send_to_all_neighbors(v.state().component);
        ctx.vote_to_halt();
    }
};

// GAS: gather the neighbor labels, apply the minimum, signal on change.
struct GasCcProgram {
    using State = CcState;
    using Gather = VertexId;

    static constexpr EdgeDir gather_dir = EdgeDir::All;
    static constexpr EdgeDir scatter_dir = EdgeDir::All;
    static constexpr bool delta_correct = true; // labels only decrease

    void init(const GasInitView &view, State &state) const { state.component = view.id; }

    Gather gather(const GasEdge<State> &edge) const { return edge.other_state().component; }

    Gather gather_sum(Gather a, Gather b) const { return std::min(a, b); }

    void apply(GasApplyCtx<State> &ctx, const std::optional<Gather> &minimum) const {
        if (minimum && *minimum < ctx.state().component)
            ctx.state().component = *minimum;
    }

    void scatter(const GasEdge<State> &edge, GasScatterCtx<Gather> &ctx) const {
        if (!ctx.changed())
            return;
        // signal to inform the neighbor of the change; with delta caching
        // the new label doubles as the delta
        if (ctx.delta_caching_enabled())
            ctx.post_delta(edge.other_id(), edge.self_state().component);
        else
            ctx.signal(edge.other_id());
    }
};

// Message API: the same propagation with a min-combiner inbox.
struct MessageCcProgram {
    using State = CcState;
    using Message = VertexId;

    static constexpr EdgeDir scatter_dir = EdgeDir::All;

    void init(const GasInitView &view, State &state) const { state.component = view.id; }

    Message combine(const Message &a, const Message &b) const { return std::min(a, b); }

    void apply(GasApplyCtx<State> &ctx, const std::optional<Message> &minimum) const {
        if (minimum && *minimum < ctx.state().component)
            ctx.state().component = *minimum;
    }

    void scatter(const GasEdge<State> &edge, GasMessageScatterCtx<Message> &ctx) const {
        if (ctx.changed())
            ctx.send(edge.other_id(), edge.self_state().component);
    }
};

// Graph-centric: a sequential pass finds the local components of each
// block once; afterwards only component labels travel between blocks, and
// a smaller incoming label relabels the whole local component at once.
class GraphCentricCcProgram {
public:
    using State = CcState;
    using Message = VertexId;

    explicit GraphCentricCcProgram(WorkerId blocks) : scratch_(blocks) {}

    CombinerFn<Message> combiner() const {
        return [](const Message &a, const Message &b) { return std::min(a, b); };
    }

    void compute(GraphCentricContext<State, Message> &ctx) {
        Scratch &s = scratch_[ctx.block_id()];
        if (ctx.superstep() == 0) {
            build_local_components(ctx.block(), s);
            for (std::size_t c = 0; c < s.comp_label.size(); ++c) {
                for (VertexId v : s.internal_members[c])
                    ctx.mutable_state(v).component = s.comp_label[c];
                for (VertexId b : s.boundary_members[c])
                    ctx.send(b, s.comp_label[c]);
            }
            ctx.vote_to_halt();
            return;
        }
        std::map<std::size_t, VertexId> lowered; // component -> new minimum
        for (const auto &group : ctx.messages()) {
            VertexId incoming = kNoVertex;
            for (Message m : group.messages)
                incoming = std::min(incoming, m);
            const std::size_t c = s.component_of(group.target);
            if (incoming < s.comp_label[c]) {
                const auto it = lowered.find(c);
                if (it == lowered.end() || incoming < it->second)
                    lowered[c] = incoming;
            }
        }
        for (const auto &[c, label] : lowered) {
            s.comp_label[c] = label;
            for (VertexId v : s.internal_members[c])
                ctx.mutable_state(v).component = label;
            for (VertexId b : s.boundary_members[c])
                ctx.send(b, label);
        }
        ctx.vote_to_halt();
    }

private:
    struct Scratch {
        std::vector<VertexId> locals; // sorted internal + boundary
        std::vector<std::size_t> comp; // local index -> component index
        std::vector<VertexId> comp_label;
        std::vector<std::vector<VertexId>> internal_members;
        std::vector<std::vector<VertexId>> boundary_members;

        std::size_t local_index(VertexId v) const {
            return static_cast<std::size_t>(
                std::lower_bound(locals.begin(), locals.end(), v) - locals.begin());
        }

        std::size_t component_of(VertexId v) const { return comp[local_index(v)]; }
    };

    static void build_local_components(const BlockSubgraph &block, Scratch &s) {
        s.locals.clear();
        s.locals.reserve(block.internal_vertices().size() + block.boundary_vertices().size());
        std::merge(block.internal_vertices().begin(), block.internal_vertices().end(),
                   block.boundary_vertices().begin(), block.boundary_vertices().end(),
                   std::back_inserter(s.locals));
        const std::size_t n = s.locals.size();
        std::vector<std::size_t> parent(n);
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        auto find = [&](std::size_t x) {
            while (parent[x] != x) {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            return x;
        };
        for (VertexId v : block.internal_vertices()) {
            const std::size_t lv = s.local_index(v);
            for (VertexId u : block.neighbors(v))
                parent[find(lv)] = find(s.local_index(u));
            for (VertexId u : block.in_neighbors(v))
                parent[find(lv)] = find(s.local_index(u));
        }
        std::map<std::size_t, std::size_t> roots;
        s.comp.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t r = find(i);
            s.comp[i] = roots.try_emplace(r, roots.size()).first->second;
        }
        s.comp_label.assign(roots.size(), kNoVertex);
        s.internal_members.assign(roots.size(), {});
        s.boundary_members.assign(roots.size(), {});
        for (std::size_t i = 0; i < n; ++i) {
            const VertexId v = s.locals[i];
            s.comp_label[s.comp[i]] = std::min(s.comp_label[s.comp[i]], v);
            if (block.is_internal(v))
                s.internal_members[s.comp[i]].push_back(v);
            else
                s.boundary_members[s.comp[i]].push_back(v);
        }
    }

    std::vector<Scratch> scratch_;
};

inline CcResult cc_pact(const Graph &graph, const CcOptions &opts) {
    namespace df = graphsim::dataflow;
    const VertexId n = graph.num_vertices();

    df::Dataset edges(df::Schema{{df::FieldType::Int, df::FieldType::Int}});
    for (VertexId u = 0; u < n; ++u)
        for (VertexId v : graph.neighbors(u))
            edges.append({static_cast<std::int64_t>(u), static_cast<std::int64_t>(v)});
    df::Dataset labels(df::Schema{{df::FieldType::Int, df::FieldType::Int}});
    for (VertexId v = 0; v < n; ++v)
        labels.append({static_cast<std::int64_t>(v), static_cast<std::int64_t>(v)});

    df::DataflowBuilder builder;
    const auto edges_src = builder.source("edges", edges.schema());
    const auto labels_src = builder.source("labels", labels.schema());
    const auto result = builder.bulk_iteration(
        labels_src, opts.max_rounds, [&](df::DataflowBuilder &body, df::NodeId current) {
            // candidate labels travel along every edge
            const auto candidates = body.join(
                current, edges_src, {0}, {0}, df::Schema{{df::FieldType::Int, df::FieldType::Int}},
                [](const df::Tuple &label_row, const df::Tuple &edge_row, df::Emitter &emit) {
                    emit({edge_row[1], label_row[1]});
                });
            const auto with_current = body.union_of(candidates, current);
            return body.group_aggregate(with_current, {0}, df::AggregateSpec::min(1));
        });

    auto flow = std::move(builder).build();
    auto run = df::execute_dag(flow, result, {{"edges", edges}, {"labels", labels}},
                               std::max<unsigned>(1, opts.workers));

    CcResult out;
    out.labels.assign(n, kNoVertex);
    for (const auto &row : run.output.rows())
        out.labels[static_cast<VertexId>(std::get<std::int64_t>(row[0]))] =
            static_cast<VertexId>(std::get<std::int64_t>(row[1]));
    out.metrics = std::move(run.metrics);
    return out;
}

} // namespace detail

inline CcResult connected_components(const Graph &graph, Engine engine,
                                     const CcOptions &opts = {}) {
    if (graph.directed())
        throw std::invalid_argument(
            "connected_components: undirected graphs only (symmetrize first)");
    const auto assignment = resolve_assignment(graph, opts);

    switch (engine) {
    case Engine::Pregel: {
        detail::PregelCcProgram program;
        PregelOptions popts;
        popts.max_supersteps = opts.max_rounds;
        popts.parallel = opts.parallel;
        popts.checkpoint_interval = opts.checkpoint_interval;
        popts.checkpoint_dir = opts.checkpoint_dir;
        popts.checkpoint_tag = "pregel-cc";
        popts.kill_at_superstep = opts.kill_at_superstep;
        auto run = run_pregel(graph, assignment, program, popts);
        CcResult out;
        out.labels.reserve(graph.num_vertices());
        for (const auto &s : run.states)
            out.labels.push_back(s.component);
        out.metrics = std::move(run.metrics);
        return out;
    }
    case Engine::GasSync: {
        detail::GasCcProgram program;
        GasOptions gopts;
        gopts.max_iterations = opts.max_rounds;
        gopts.parallel = opts.parallel;
        gopts.delta_caching = opts.delta_caching;
        gopts.verify_cache = opts.verify_cache;
        auto run = run_gas_sync(graph, assignment, program, gopts);
        CcResult out;
        for (const auto &s : run.states)
            out.labels.push_back(s.component);
        out.metrics = std::move(run.metrics);
        return out;
    }
    case Engine::GasAsync: {
        detail::GasCcProgram program;
        GasAsyncOptions gopts;
        gopts.seed = opts.seed;
        gopts.shuffle = opts.async_shuffle;
        gopts.initial_order = opts.async_order;
        gopts.parallel = opts.parallel;
        gopts.log_applies = opts.log_applies;
        auto run = run_gas_async(graph, assignment, program, gopts);
        CcResult out;
        for (const auto &s : run.states)
            out.labels.push_back(s.component);
        out.metrics = std::move(run.metrics);
        out.apply_log = std::move(run.apply_log);
        return out;
    }
    case Engine::GasMessage: {
        detail::MessageCcProgram program;
        GasOptions gopts;
        gopts.max_iterations = opts.max_rounds;
        gopts.parallel = opts.parallel;
        auto run = run_gas_message_api(graph, assignment, program, GasEngineKind::Sync, gopts);
        CcResult out;
        for (const auto &s : run.states)
            out.labels.push_back(s.component);
        out.metrics = std::move(run.metrics);
        return out;
    }
    case Engine::GraphCentric: {
        detail::GraphCentricCcProgram program(assignment.k);
        GraphCentricOptions gopts;
        gopts.max_supersteps = opts.max_rounds;
        gopts.parallel = opts.parallel;
        auto run = run_graph_centric(graph, assignment, program, gopts);
        CcResult out;
        for (const auto &s : run.states)
            out.labels.push_back(s.component);
        out.metrics = std::move(run.metrics);
        return out;
    }
    case Engine::Pact:
        return detail::cc_pact(graph, opts);
    }
    throw std::invalid_argument("connected_components: unknown engine");
}

} // namespace graphsim::algo
