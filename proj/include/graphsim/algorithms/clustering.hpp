#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "../dataflow.hpp"
#include "../exact_sum.hpp"
#include "../gas.hpp"
#include "../graph.hpp"
#include "../graph_centric.hpp"
#include "../pregel.hpp"
#include "common.hpp"
#include "oracles.hpp"

// Clustering coefficients. The local coefficient of v is delta(v)/tau(v)
// with delta(v) the number of triangles through v and tau(v) =
// deg(v)*(deg(v)-1)/2, defined for V' = {v : deg(v) >= 2}. The average
// local coefficient C(G) is the mean over V'; the global coefficient is
// 3*triangles / triplets, computed from the same aggregates. The exact
// algorithm exchanges whole neighborhoods (message volume O(n*dmax^2));
// the approximation samples neighbor pairs and probes them with membership
// queries.

namespace graphsim::algo {

struct ClusteringResult {
    std::vector<double> local; // 0.0 outside V'
    double average_local = 0.0;
    double global_cc = 0.0;
    std::uint64_t triangles = 0;
    std::uint64_t triplets = 0;
    std::uint64_t samples = 0; // approximation only
    std::uint64_t hits = 0;
    double estimate = 0.0;
    RunMetrics metrics;
};

enum class ApproxTarget { AverageLocal, Global };

struct ClusteringOptions : EngineOptions {};

struct ApproxOptions : EngineOptions {
    std::uint64_t samples = 100000;
    ApproxTarget target = ApproxTarget::AverageLocal;
};

namespace detail {

inline void clustering_volume_guard(const Graph &graph) {
    // every vertex ships its neighborhood to each neighbor
    std::uint64_t volume = 0;
    for (VertexId v = 0; v < graph.num_vertices(); ++v) {
        const std::uint64_t d = graph.degree(v);
        volume += d * d;
    }
    if (volume > 200000000ULL)
        throw ResourceError("clustering_exact: neighborhood exchange would need " +
                            std::to_string(volume) + " messages");
}

inline std::uint64_t tau_of(std::uint64_t degree) { return degree * (degree - 1) / 2; }

/// Driver-side reduction of per-vertex (delta, tau) into the result
/// scalars; every engine ends up folding the identical values.
inline void finalize_clustering(const Graph &graph, std::span<const std::uint64_t> delta,
                                ClusteringResult &out) {
    const VertexId n = graph.num_vertices();
    out.local.assign(n, 0.0);
    ExactSum local_sum;
    std::uint64_t vprime = 0, actual = 0, possible = 0;
    for (VertexId v = 0; v < n; ++v) {
        const std::uint64_t tau = tau_of(graph.degree(v));
        possible += tau;
        actual += delta[v];
        if (tau > 0) {
            out.local[v] = static_cast<double>(delta[v]) / static_cast<double>(tau);
            local_sum.add(out.local[v]);
            ++vprime;
        }
    }
    out.average_local = vprime ? local_sum.value() / static_cast<double>(vprime) : 0.0;
    out.global_cc = possible ? static_cast<double>(actual) / static_cast<double>(possible) : 0.0;
    out.triangles = actual / 3;
    out.triplets = possible;
}

// Pregel, two supersteps: every vertex sends its whole neighborhood to all
// neighbors, then counts how many incoming ids are its own neighbors (each
// link among neighbors arrives from both endpoints, hence the halving).
struct PregelClusteringProgram {
    using State = std::int64_t; // delta(v)
    using Message = VertexId;

    void register_aggregators(AggregatorBoard &board) const {
        board.register_aggregator("actual", AggKind::IntSum, std::int64_t{0}, /*sticky=*/true);
        board.register_aggregator("possible", AggKind::IntSum, std::int64_t{0}, true);
        board.register_aggregator("local_sum", AggKind::DoubleSum, 0.0, true);
        board.register_aggregator("vprime", AggKind::IntSum, std::int64_t{0}, true);
        board.register_aggregator("avg_local", AggKind::DoubleMax, 0.0, true);
        board.register_aggregator("global", AggKind::DoubleMax, 0.0, true);
    }

    void compute(PregelVertex<State> &v, std::span<const Message> messages,
                 PregelContext<Message> &ctx) {
        if (ctx.superstep() == 0) {
            for (VertexId u : v.neighbors())
                ctx.send_to_all_neighbors(u);
            ctx.vote_to_halt();
            return;
        }
        const auto nb = v.neighbors();
        std::int64_t neighbor_edges = 0;
        for (Message m : messages)
            if (std::binary_search(nb.begin(), nb.end(), m))
                ++neighbor_edges;
        neighbor_edges /= 2; // each link has a message from both vertices
        v.state() = neighbor_edges;
        const auto possible = static_cast<std::int64_t>(tau_of(nb.size()));
        ctx.aggregate("actual", neighbor_edges);
        ctx.aggregate("possible", possible);
        if (possible > 0) {
            ctx.aggregate("local_sum",
                          static_cast<double>(neighbor_edges) / static_cast<double>(possible));
            ctx.aggregate("vprime", std::int64_t{1});
        }
        ctx.vote_to_halt();
    }

    void master_compute(PregelMasterContext &ctx) {
        if (ctx.superstep() != 1)
            return;
        const auto vprime = std::get<std::int64_t>(ctx.aggregator_value("vprime"));
        const auto possible = std::get<std::int64_t>(ctx.aggregator_value("possible"));
        const auto actual = std::get<std::int64_t>(ctx.aggregator_value("actual"));
        const auto local_sum = std::get<double>(ctx.aggregator_value("local_sum"));
        ctx.set_aggregator("avg_local",
                           vprime ? local_sum / static_cast<double>(vprime) : 0.0);
        ctx.set_aggregator("global", possible ? static_cast<double>(actual) /
                                                    static_cast<double>(possible)
                                              : 0.0);
    }
};

// GAS, two vertex programs (Alg-6 style): the first collects neighborhoods
// and stores the common-neighbor count of each edge in a per-arc slot; the
// second sums the slots.
struct NeighborListState {
    std::vector<VertexId> neighbors;

    friend bool operator==(const NeighborListState &, const NeighborListState &) = default;
};

class GasClusteringPhase1 {
public:
    using State = NeighborListState;
    using Gather = std::vector<VertexId>;

    static constexpr EdgeDir gather_dir = EdgeDir::All;
    static constexpr EdgeDir scatter_dir = EdgeDir::All;
    static constexpr bool delta_correct = false;

    explicit GasClusteringPhase1(const Graph &graph) : common_(graph.num_arcs(), 0) {}

    std::uint64_t gather_read_bytes() const { return sizeof(VertexId); }

    void init(const GasInitView &, State &) const {}

    Gather gather(const GasEdge<State> &edge) const { return {edge.other_id()}; }

    Gather gather_sum(Gather a, Gather b) const {
        Gather out;
        out.reserve(a.size() + b.size());
        std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
        return out;
    }

    void apply(GasApplyCtx<State> &ctx, const std::optional<Gather> &neighbors) const {
        ctx.state().neighbors = neighbors.value_or(Gather{});
    }

    void scatter(const GasEdge<State> &edge, GasScatterCtx<Gather> &) {
        const auto &a = edge.self_state().neighbors;
        const auto &b = edge.other_state().neighbors;
        std::uint32_t common = 0;
        std::size_t i = 0, j = 0;
        while (i < a.size() && j < b.size()) {
            if (a[i] < b[j])
                ++i;
            else if (b[j] < a[i])
                ++j;
            else {
                ++common;
                ++i;
                ++j;
            }
        }
        common_[edge.arc_slot()] = common;
    }

    const std::vector<std::uint32_t> &common() const { return common_; }

private:
    std::vector<std::uint32_t> common_; // per-arc attachment slot
};

class GasClusteringPhase2 {
public:
    using State = std::int64_t; // 2 * delta(v) before halving
    using Gather = std::int64_t;

    static constexpr EdgeDir gather_dir = EdgeDir::All;
    static constexpr EdgeDir scatter_dir = EdgeDir::Out;
    static constexpr bool delta_correct = false;

    explicit GasClusteringPhase2(const std::vector<std::uint32_t> &common) : common_(&common) {}

    void init(const GasInitView &, State &) const {}

    Gather gather(const GasEdge<State> &edge) const {
        return static_cast<Gather>((*common_)[edge.arc_slot()]);
    }

    Gather gather_sum(Gather a, Gather b) const { return a + b; }

    void apply(GasApplyCtx<State> &ctx, const std::optional<Gather> &sum) const {
        ctx.state() = sum.value_or(0);
    }

    void scatter(const GasEdge<State> &, GasScatterCtx<Gather> &) const {}

private:
    const std::vector<std::uint32_t> *common_;
};

// Graph-centric, two supersteps: neighborhood lists cross blocks only for
// boundary-adjacent vertices; within a block intersections read the
// subgraph directly.
class GraphCentricClusteringProgram {
public:
    using State = std::int64_t; // delta(v)
    using Message = std::vector<VertexId>;

    explicit GraphCentricClusteringProgram(WorkerId blocks) : blocks_(blocks) {}

    std::uint64_t message_bytes(const Message &m) const { return m.size() * sizeof(VertexId); }

    void compute(GraphCentricContext<State, Message> &ctx) {
        const auto &block = ctx.block();
        if (ctx.superstep() == 0) {
            for (VertexId v : block.internal_vertices()) {
                const auto nb = block.neighbors(v);
                Message payload(nb.begin(), nb.end());
                for (VertexId u : nb)
                    if (!block.is_internal(u))
                        ctx.send(u, payload);
            }
            return; // every block still owes its counting pass
        }

        // boundary neighbor -> its full neighborhood, one list per message
        std::map<VertexId, std::vector<const Message *>> lists_for;
        for (const auto &group : ctx.messages()) {
            auto &bucket = lists_for[group.target];
            for (const Message &m : group.messages)
                bucket.push_back(&m);
        }
        for (VertexId v : block.internal_vertices()) {
            const auto nb = block.neighbors(v);
            std::int64_t twice_delta = 0;
            for (VertexId u : nb)
                if (block.is_internal(u))
                    twice_delta += intersection_size(nb, block.neighbors(u));
            if (const auto it = lists_for.find(v); it != lists_for.end())
                for (const Message *list : it->second)
                    twice_delta += intersection_size(nb, *list);
            ctx.mutable_state(v) = twice_delta / 2;
        }
        ctx.vote_to_halt();
    }

private:
    static std::int64_t intersection_size(std::span<const VertexId> a,
                                          std::span<const VertexId> b) {
        std::int64_t common = 0;
        std::size_t i = 0, j = 0;
        while (i < a.size() && j < b.size()) {
            if (a[i] < b[j])
                ++i;
            else if (b[j] < a[i])
                ++j;
            else {
                ++common;
                ++i;
                ++j;
            }
        }
        return common;
    }

    WorkerId blocks_;
};

inline ClusteringResult clustering_pact(const Graph &graph, const ClusteringOptions &opts) {
    namespace df = graphsim::dataflow;
    const VertexId n = graph.num_vertices();

    df::Dataset edges(df::Schema{{df::FieldType::Int, df::FieldType::Int}});
    for (VertexId u = 0; u < n; ++u)
        for (VertexId v : graph.neighbors(u))
            edges.append({static_cast<std::int64_t>(u), static_cast<std::int64_t>(v)});

    df::DataflowBuilder builder;
    const auto edges_src = builder.source("edges", edges.schema());
    // neighbors-of-neighbors: paths u - v - w keyed by the middle vertex
    const auto paths = builder.join(
        edges_src, edges_src, {0}, {0},
        df::Schema{{df::FieldType::Int, df::FieldType::Int, df::FieldType::Int}},
        [](const df::Tuple &a, const df::Tuple &b, df::Emitter &emit) {
            if (!(a[1] == b[1]))
                emit({a[1], b[1], a[0]});
        });
    // close the wedge against the edge set again
    const auto closed = builder.join(paths, edges_src, {0, 1}, {0, 1},
                                     df::Schema{{df::FieldType::Int}},
                                     [](const df::Tuple &path, const df::Tuple &, df::Emitter &emit) {
                                         emit({path[2]});
                                     });
    const auto counts = builder.group_aggregate(closed, {0}, df::AggregateSpec::count());

    auto flow = std::move(builder).build();
    auto run = df::execute_dag(flow, counts, {{"edges", edges}},
                               std::max<unsigned>(1, opts.workers));

    std::vector<std::uint64_t> delta(n, 0);
    for (const auto &row : run.output.rows())
        delta[static_cast<VertexId>(std::get<std::int64_t>(row[0]))] =
            static_cast<std::uint64_t>(std::get<std::int64_t>(row[1])) / 2;

    ClusteringResult out;
    finalize_clustering(graph, delta, out);
    out.metrics = std::move(run.metrics);
    return out;
}

// Approximation: sampled vertices draw neighbor pairs (u, w) and send a
// membership query for w to u; the next superstep intersects the incoming
// ids with the local neighborhood and counts the hits.
struct SampleDraws {
    std::vector<std::vector<std::pair<VertexId, VertexId>>> queries; // per source vertex
    std::uint64_t samples = 0;
};

inline SampleDraws draw_samples(const Graph &graph, ApproxTarget target, std::uint64_t samples,
                                std::uint64_t seed) {
    if (samples == 0)
        throw std::invalid_argument("clustering_approx: samples must be positive");
    const VertexId n = graph.num_vertices();
    std::vector<VertexId> candidates;
    std::vector<std::uint64_t> cumulative;
    std::uint64_t total = 0;
    for (VertexId v = 0; v < n; ++v) {
        const std::uint64_t d = graph.degree(v);
        if (d < 2)
            continue;
        candidates.push_back(v);
        total += target == ApproxTarget::AverageLocal ? 1 : d * (d - 1);
        cumulative.push_back(total);
    }
    if (candidates.empty())
        throw std::invalid_argument("clustering_approx: no vertex with degree >= 2");

    std::vector<std::uint64_t> count(n, 0);
    Rng rng(seed);
    for (std::uint64_t s = 0; s < samples; ++s) {
        const std::uint64_t r = rng.next_below(total);
        const auto idx = static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
        ++count[candidates[idx]];
    }

    SampleDraws out;
    out.samples = samples;
    out.queries.assign(n, {});
    for (VertexId v = 0; v < n; ++v) {
        if (count[v] == 0)
            continue;
        const auto nb = graph.neighbors(v);
        Rng pair_rng(mix_hash(v, seed));
        out.queries[v].reserve(count[v]);
        for (std::uint64_t i = 0; i < count[v]; ++i) {
            const auto a = static_cast<std::size_t>(pair_rng.next_below(nb.size()));
            auto b = static_cast<std::size_t>(pair_rng.next_below(nb.size() - 1));
            if (b >= a)
                ++b; // two different neighbors
            out.queries[v].emplace_back(nb[a], nb[b]);
        }
    }
    return out;
}

struct PregelApproxProgram {
    using State = std::int64_t; // hits answered by this vertex
    using Message = VertexId;

    const SampleDraws *draws;

    void register_aggregators(AggregatorBoard &board) const {
        board.register_aggregator("hits", AggKind::IntSum, std::int64_t{0}, /*sticky=*/true);
    }

    void compute(PregelVertex<State> &v, std::span<const Message> messages,
                 PregelContext<Message> &ctx) {
        if (ctx.superstep() == 0) {
            for (const auto &[u, w] : draws->queries[v.id()])
                ctx.send(u, w);
            ctx.vote_to_halt();
            return;
        }
        const auto nb = v.neighbors();
        std::int64_t hits = 0;
        for (Message w : messages)
            if (std::binary_search(nb.begin(), nb.end(), w))
                ++hits;
        v.state() += hits;
        ctx.aggregate("hits", hits);
        ctx.vote_to_halt();
    }
};

class GasApproxProgram {
public:
    using State = std::int64_t;
    using Message = std::vector<VertexId>; // queried ids, multiset

    static constexpr EdgeDir scatter_dir = EdgeDir::Out;

    GasApproxProgram(const Graph &graph, const SampleDraws &draws)
        : hits_(graph.num_vertices(), 0), draws_(&draws) {
        // queries of each source, sorted by the queried neighbor so the
        // scatter over an arc can pick its batch with a range lookup
        by_target_.assign(graph.num_vertices(), {});
        for (VertexId v = 0; v < graph.num_vertices(); ++v) {
            by_target_[v].assign(draws.queries[v].begin(), draws.queries[v].end());
            std::sort(by_target_[v].begin(), by_target_[v].end());
        }
    }

    std::uint64_t message_bytes(const Message &m) const { return m.size() * sizeof(VertexId); }

    void init(const GasInitView &, State &) const {}

    Message combine(const Message &a, const Message &b) const {
        Message out;
        out.reserve(a.size() + b.size());
        std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
        return out;
    }

    void apply(GasApplyCtx<State> &ctx, const std::optional<Message> &queries) {
        if (!queries)
            return;
        const auto &nb = neighbors_[ctx.id()];
        std::int64_t hits = 0;
        for (VertexId w : *queries)
            if (std::binary_search(nb.begin(), nb.end(), w))
                ++hits;
        hits_[ctx.id()] += hits;
    }

    void scatter(const GasEdge<State> &edge, GasMessageScatterCtx<Message> &ctx) {
        if (!ctx.changed())
            return; // queries go out once, on the bootstrap round
        const auto &queries = by_target_[edge.self_id()];
        const auto lo = std::lower_bound(queries.begin(), queries.end(),
                                         std::pair<VertexId, VertexId>{edge.other_id(), 0});
        Message batch;
        for (auto it = lo; it != queries.end() && it->first == edge.other_id(); ++it)
            batch.push_back(it->second);
        if (!batch.empty()) {
            std::sort(batch.begin(), batch.end());
            ctx.send(edge.other_id(), std::move(batch));
        }
    }

    void cache_neighbors(const Graph &graph) {
        neighbors_.assign(graph.num_vertices(), {});
        for (VertexId v = 0; v < graph.num_vertices(); ++v) {
            const auto nb = graph.neighbors(v);
            neighbors_[v].assign(nb.begin(), nb.end());
        }
    }

    std::uint64_t total_hits() const {
        std::uint64_t total = 0;
        for (auto h : hits_)
            total += static_cast<std::uint64_t>(h);
        return total;
    }

private:
    std::vector<State> hits_;
    const SampleDraws *draws_;
    std::vector<std::vector<std::pair<VertexId, VertexId>>> by_target_;
    std::vector<std::vector<VertexId>> neighbors_;
};

} // namespace detail

inline ClusteringResult clustering_exact(const Graph &graph, Engine engine,
                                         const ClusteringOptions &opts = {}) {
    if (graph.directed())
        throw std::invalid_argument("clustering_exact: undirected graphs only");
    detail::clustering_volume_guard(graph);
    const auto assignment = resolve_assignment(graph, opts);
    const VertexId n = graph.num_vertices();

    switch (engine) {
    case Engine::Pregel: {
        detail::PregelClusteringProgram program;
        PregelOptions popts;
        popts.parallel = opts.parallel;
        auto run = run_pregel(graph, assignment, program, popts);
        std::vector<std::uint64_t> delta(n, 0);
        for (VertexId v = 0; v < n; ++v)
            delta[v] = static_cast<std::uint64_t>(run.states[v]);
        ClusteringResult out;
        detail::finalize_clustering(graph, delta, out);
        // take the scalars the master computed; tests check they agree with
        // the driver fold
        out.average_local = std::get<double>(run.aggregators.at("avg_local"));
        out.global_cc = std::get<double>(run.aggregators.at("global"));
        out.metrics = std::move(run.metrics);
        return out;
    }
    case Engine::GasSync:
    case Engine::GasMessage: {
        detail::GasClusteringPhase1 phase1(graph);
        GasOptions gopts;
        gopts.parallel = opts.parallel;
        auto run1 = run_gas_sync(graph, assignment, phase1, gopts);
        detail::GasClusteringPhase2 phase2(phase1.common());
        auto run2 = run_gas_sync(graph, assignment, phase2, gopts);
        std::vector<std::uint64_t> delta(n, 0);
        for (VertexId v = 0; v < n; ++v)
            delta[v] = static_cast<std::uint64_t>(run2.states[v] / 2);
        ClusteringResult out;
        detail::finalize_clustering(graph, delta, out);
        out.metrics = run1.metrics;
        out.metrics.merge_counters(run2.metrics);
        out.metrics.supersteps = run1.metrics.supersteps + run2.metrics.supersteps;
        return out;
    }
    case Engine::GraphCentric: {
        detail::GraphCentricClusteringProgram program(assignment.k);
        GraphCentricOptions gopts;
        gopts.parallel = opts.parallel;
        auto run = run_graph_centric(graph, assignment, program, gopts);
        std::vector<std::uint64_t> delta(n, 0);
        for (VertexId v = 0; v < n; ++v)
            delta[v] = static_cast<std::uint64_t>(run.states[v]);
        ClusteringResult out;
        detail::finalize_clustering(graph, delta, out);
        out.metrics = std::move(run.metrics);
        return out;
    }
    case Engine::Pact:
        return detail::clustering_pact(graph, opts);
    default:
        throw std::invalid_argument(
            "clustering_exact: supported engines are pregel, gas-sync, graph-centric, pact");
    }
}

inline ClusteringResult clustering_approx(const Graph &graph, Engine engine,
                                          const ApproxOptions &opts = {}) {
    if (graph.directed())
        throw std::invalid_argument("clustering_approx: undirected graphs only");
    const auto assignment = resolve_assignment(graph, opts);
    const auto draws = detail::draw_samples(graph, opts.target, opts.samples, opts.seed);

    ClusteringResult out;
    out.samples = draws.samples;

    switch (engine) {
    case Engine::Pregel: {
        detail::PregelApproxProgram program{&draws};
        PregelOptions popts;
        popts.parallel = opts.parallel;
        auto run = run_pregel(graph, assignment, program, popts);
        out.hits = static_cast<std::uint64_t>(std::get<std::int64_t>(run.aggregators.at("hits")));
        out.metrics = std::move(run.metrics);
        break;
    }
    case Engine::GasMessage: {
        detail::GasApproxProgram program(graph, draws);
        program.cache_neighbors(graph);
        GasOptions gopts;
        gopts.parallel = opts.parallel;
        auto run = run_gas_message_api(graph, assignment, program, GasEngineKind::Sync, gopts);
        out.hits = program.total_hits();
        out.metrics = std::move(run.metrics);
        break;
    }
    default:
        throw std::invalid_argument(
            "clustering_approx: supported engines are pregel and gas-message");
    }

    out.estimate = static_cast<double>(out.hits) / static_cast<double>(out.samples);
    return out;
}

} // namespace graphsim::algo
