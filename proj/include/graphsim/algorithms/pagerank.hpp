#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
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

// PageRank power iteration, P_{i+1}(v) = a + (1-a) * sum over in-edges of
// P_i(u)/outdeg(u) with P_0 = 1. Vertices without out-edges send nothing.
// Every synchronous engine reduces the per-vertex contributions exactly and
// rounds once, so fixed-mode scores are bit-identical across engines,
// worker counts and combiner settings. Undirected graphs are treated as
// arcs in both directions (outdeg = degree).

namespace graphsim::algo {

enum class PrMode { Fixed, Tolerance };

struct PrOptions : EngineOptions {
    double alpha = 0.15;
    PrMode mode = PrMode::Fixed;
    std::uint64_t iterations = 30; // fixed mode
    double tolerance = 1e-8;       // tolerance mode
    bool delta_caching = false;    // gas-sync: scatter posts deltas into the gather cache
    bool verify_cache = false;
    bool use_combiner = true;      // pregel: sum-combine messages
};

struct PrResult {
    std::vector<double> scores;
    double final_max_delta = 0.0;
    RunMetrics metrics;
};

struct PrState {
    double rank = 0.0;

    friend bool operator==(const PrState &, const PrState &) = default;
};

namespace detail {

inline void validate_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("pagerank: alpha must be in (0,1)");
}

// Pregel: rank starts at 1; a sum combiner merges messages; in tolerance
// mode a global AND aggregator of per-vertex convergence, readable one
// superstep later, triggers the vote to halt.
struct PregelPrProgram {
    using State = PrState;
    using Message = ExactSum;

    double alpha;
    PrMode mode;
    std::uint64_t iterations;
    double tolerance;
    bool use_combiner = true;

    void register_aggregators(AggregatorBoard &board) const {
        board.register_aggregator("converged", AggKind::BoolAnd, false);
        board.register_aggregator("max_delta", AggKind::DoubleMax, 0.0);
    }

    CombinerFn<Message> combiner() const {
        if (!use_combiner)
            return {};
        return [](const Message &a, const Message &b) {
            Message out = a;
            out.merge(b);
            return out;
        };
    }

    std::uint64_t message_bytes(const Message &) const { return sizeof(double); }

    void compute(PregelVertex<State> &v, std::span<const Message> messages,
                 PregelContext<Message> &ctx) {
        if (ctx.superstep() == 0) {
            v.state().rank = 1.0;
            if (mode == PrMode::Tolerance)
                ctx.aggregate("converged", false); // nothing settled yet
        } else {
            ExactSum sum;
            for (const Message &m : messages)
                sum.merge(m);
            const double new_score = alpha + (1.0 - alpha) * sum.value();
            const double delta = new_score - v.state().rank;
            v.state().rank = new_score;
            if (mode == PrMode::Tolerance) {
                ctx.aggregate("converged", std::abs(delta) <= tolerance);
                ctx.aggregate("max_delta", std::abs(delta));
            }
        }
        const bool stop = mode == PrMode::Fixed
                              ? ctx.superstep() == iterations
                              : std::get<bool>(ctx.aggregator_value("converged"));
        if (stop) {
            ctx.vote_to_halt();
        } else if (v.num_edges() > 0) {
            ctx.send_to_all_neighbors(ExactSum(v.state().rank / v.num_edges()));
        }
    }
};

// GAS: gather on in-edges, apply the update, scatter on out-edges. The
// delta-caching variant posts (delta / outdeg), i.e. the change of the
// target's gather aggregate, instead of a plain signal.
class GasPrProgram {
public:
    using State = PrState;
    using Gather = ExactSum;

    static constexpr EdgeDir gather_dir = EdgeDir::In;
    static constexpr EdgeDir scatter_dir = EdgeDir::Out;
    static constexpr bool delta_correct = true;

    GasPrProgram(const Graph &graph, double alpha, PrMode mode, double tolerance,
                 bool post_deltas)
        : deltas_(graph.num_vertices(), 0.0), prev_rank_(graph.num_vertices(), 0.0),
          alpha_(alpha), mode_(mode), tolerance_(tolerance), post_deltas_(post_deltas) {}

    std::uint64_t gather_read_bytes() const { return sizeof(double); }

    void init(const GasInitView &, State &state) const { state.rank = 1.0; }

    Gather gather(const GasEdge<State> &edge) const {
        return ExactSum(edge.other_state().rank / edge.other_out_degree());
    }

    Gather gather_sum(Gather a, Gather b) const {
        a.merge(b);
        return a;
    }

    void apply(GasApplyCtx<State> &ctx, const std::optional<Gather> &sum) {
        const double s = sum ? sum->value() : 0.0;
        const double new_score = alpha_ + (1.0 - alpha_) * s;
        const double delta = new_score - ctx.state().rank;
        prev_rank_[ctx.id()] = ctx.state().rank;
        ctx.state().rank = new_score;
        deltas_[ctx.id()] = delta;
        ctx.report_delta(std::abs(delta));
    }

    void scatter(const GasEdge<State> &edge, GasScatterCtx<Gather> &ctx) const {
        const bool keep_going =
            mode_ == PrMode::Fixed || std::abs(deltas_[edge.self_id()]) > tolerance_;
        if (post_deltas_ && ctx.delta_caching_enabled()) {
            if (deltas_[edge.self_id()] == 0.0)
                return;
            // the change of the target's gather aggregate, as the exact
            // two-term difference so the cache telescopes to the fresh sum
            const double d = edge.self_out_degree();
            Gather delta(edge.self_state().rank / d);
            delta.add(-(prev_rank_[edge.self_id()] / d));
            // sub-tolerance changes keep the cache fresh without waking the
            // target (post delta only if the vertex has not converged)
            ctx.post_delta(edge.other_id(), std::move(delta), keep_going);
        } else if (keep_going) {
            ctx.signal(edge.other_id());
        }
    }

private:
    std::vector<double> deltas_;
    std::vector<double> prev_rank_;
    double alpha_;
    PrMode mode_;
    double tolerance_;
    bool post_deltas_;
};

// Graph-centric: within a block the previous iteration's internal scores
// are buffered so the synchronous rule applies unchanged; only the
// contributions that cross blocks travel as (sum-combined) messages.
class GraphCentricPrProgram {
public:
    using State = PrState;
    using Message = ExactSum;

    GraphCentricPrProgram(WorkerId blocks, double alpha, PrMode mode, std::uint64_t iterations,
                          double tolerance)
        : scratch_(blocks), alpha_(alpha), mode_(mode), iterations_(iterations),
          tolerance_(tolerance) {}

    void register_aggregators(AggregatorBoard &board) const {
        board.register_aggregator("converged", AggKind::BoolAnd, false);
        board.register_aggregator("max_delta", AggKind::DoubleMax, 0.0);
    }

    CombinerFn<Message> combiner() const {
        return [](const Message &a, const Message &b) {
            Message out = a;
            out.merge(b);
            return out;
        };
    }

    std::uint64_t message_bytes(const Message &) const { return sizeof(double); }

    void compute(GraphCentricContext<State, Message> &ctx) {
        Scratch &s = scratch_[ctx.block_id()];
        const auto &internal = ctx.block().internal_vertices();
        if (ctx.superstep() == 0) {
            s.prev.assign(internal.size(), 1.0);
            for (VertexId v : internal)
                ctx.mutable_state(v).rank = 1.0;
            if (mode_ == PrMode::Tolerance)
                ctx.aggregate("converged", false);
            send_contributions(ctx, s);
            return;
        }

        std::map<VertexId, ExactSum> incoming;
        for (const auto &group : ctx.messages()) {
            ExactSum sum;
            for (const Message &m : group.messages)
                sum.merge(m);
            incoming.emplace(group.target, std::move(sum));
        }

        bool all_converged = true;
        double max_delta = 0.0;
        std::vector<double> next(internal.size());
        for (std::size_t i = 0; i < internal.size(); ++i) {
            const VertexId v = internal[i];
            ExactSum sum;
            if (const auto it = incoming.find(v); it != incoming.end())
                sum = it->second;
            for (VertexId u : ctx.block().in_neighbors(v))
                if (ctx.block().is_internal(u))
                    sum.add(s.prev[s.index_of(internal, u)] /
                            ctx.block().neighbors(u).size());
            next[i] = alpha_ + (1.0 - alpha_) * sum.value();
            const double delta = next[i] - s.prev[i];
            max_delta = std::max(max_delta, std::abs(delta));
            if (std::abs(delta) > tolerance_)
                all_converged = false;
        }
        for (std::size_t i = 0; i < internal.size(); ++i)
            ctx.mutable_state(internal[i]).rank = next[i];
        s.prev = std::move(next);

        if (mode_ == PrMode::Tolerance) {
            ctx.aggregate("converged", all_converged);
            ctx.aggregate("max_delta", max_delta);
        }
        const bool stop = mode_ == PrMode::Fixed
                              ? ctx.superstep() == iterations_
                              : std::get<bool>(ctx.aggregator_value("converged"));
        if (stop)
            ctx.vote_to_halt();
        else
            send_contributions(ctx, s);
    }

private:
    struct Scratch {
        std::vector<double> prev; // previous iteration, parallel to internal list

        std::size_t index_of(const std::vector<VertexId> &internal, VertexId v) const {
            return static_cast<std::size_t>(
                std::lower_bound(internal.begin(), internal.end(), v) - internal.begin());
        }
    };

    void send_contributions(GraphCentricContext<State, Message> &ctx, const Scratch &s) const {
        const auto &internal = ctx.block().internal_vertices();
        for (std::size_t i = 0; i < internal.size(); ++i) {
            const VertexId u = internal[i];
            const auto targets = ctx.block().neighbors(u);
            if (targets.empty())
                continue;
            const double contribution = s.prev[i] / targets.size();
            for (VertexId w : targets)
                if (!ctx.block().is_internal(w))
                    ctx.send(w, ExactSum(contribution));
        }
    }

    std::vector<Scratch> scratch_;
    double alpha_;
    PrMode mode_;
    std::uint64_t iterations_;
    double tolerance_;
};

inline PrResult pr_pact(const Graph &graph, const PrOptions &opts) {
    namespace df = graphsim::dataflow;
    const VertexId n = graph.num_vertices();

    df::Dataset edges(df::Schema{{df::FieldType::Int, df::FieldType::Int}});
    for (VertexId u = 0; u < n; ++u)
        for (VertexId v : graph.out_neighbors(u))
            edges.append({static_cast<std::int64_t>(u), static_cast<std::int64_t>(v)});
    df::Dataset degrees(df::Schema{{df::FieldType::Int, df::FieldType::Int}});
    for (VertexId v = 0; v < n; ++v)
        degrees.append({static_cast<std::int64_t>(v), static_cast<std::int64_t>(graph.out_degree(v))});
    df::Dataset scores0(df::Schema{{df::FieldType::Int, df::FieldType::Double}});
    for (VertexId v = 0; v < n; ++v)
        scores0.append({static_cast<std::int64_t>(v), 1.0});

    const double alpha = opts.alpha;
    auto iteration_count = std::make_shared<std::uint64_t>(0);
    auto last_delta = std::make_shared<double>(0.0);

    df::DataflowBuilder builder;
    const auto edges_src = builder.source("edges", edges.schema());
    const auto degrees_src = builder.source("degrees", degrees.schema());
    const auto scores_src = builder.source("scores", scores0.schema());

    const auto body = [&](df::DataflowBuilder &b, df::NodeId current) {
        const auto with_deg = b.join(
            current, degrees_src, {0}, {0},
            df::Schema{{df::FieldType::Int, df::FieldType::Double, df::FieldType::Int}},
            [](const df::Tuple &score, const df::Tuple &deg, df::Emitter &emit) {
                emit({score[0], score[1], deg[1]});
            });
        const auto contributions = b.join(
            with_deg, edges_src, {0}, {0},
            df::Schema{{df::FieldType::Int, df::FieldType::Double}},
            [](const df::Tuple &sd, const df::Tuple &edge, df::Emitter &emit) {
                const double score = std::get<double>(sd[1]);
                const auto deg = std::get<std::int64_t>(sd[2]);
                emit({edge[1], score / static_cast<double>(deg)});
            });
        const auto zeros = b.map(current, df::Schema{{df::FieldType::Int, df::FieldType::Double}},
                                 [](const df::Tuple &row, df::Emitter &emit) {
                                     emit({row[0], 0.0});
                                 });
        const auto unioned = b.union_of(contributions, zeros);
        const auto sums = b.group_aggregate(unioned, {0}, df::AggregateSpec::sum(1));
        return b.map(sums, df::Schema{{df::FieldType::Int, df::FieldType::Double}},
                     [alpha](const df::Tuple &row, df::Emitter &emit) {
                         emit({row[0], alpha + (1.0 - alpha) * std::get<double>(row[1])});
                     });
    };

    df::ConvergenceFn stop;
    if (opts.mode == PrMode::Fixed) {
        const std::uint64_t iterations = opts.iterations;
        stop = [iteration_count, iterations](const df::Dataset &, const df::Dataset &) {
            return ++*iteration_count >= iterations;
        };
    } else {
        const double eps = opts.tolerance;
        stop = [last_delta, eps](const df::Dataset &prev, const df::Dataset &next) {
            auto order = [](const df::Tuple &a, const df::Tuple &b) { return a[0] < b[0]; };
            auto ps = prev.rows();
            auto ns = next.rows();
            std::sort(ps.begin(), ps.end(), order);
            std::sort(ns.begin(), ns.end(), order);
            double max_delta = 0.0;
            for (std::size_t i = 0; i < ps.size(); ++i)
                max_delta = std::max(max_delta, std::abs(std::get<double>(ns[i][1]) -
                                                         std::get<double>(ps[i][1])));
            *last_delta = max_delta;
            return max_delta <= eps;
        };
    }

    const auto result = builder.bulk_iteration(
        scores_src, opts.mode == PrMode::Fixed ? opts.iterations : opts.max_rounds,
        [&](df::DataflowBuilder &b, df::NodeId current) { return body(b, current); }, stop);

    auto flow = std::move(builder).build();
    auto run = df::execute_dag(flow, result,
                               {{"edges", edges}, {"degrees", degrees}, {"scores", scores0}},
                               std::max<unsigned>(1, opts.workers));

    PrResult out;
    out.scores.assign(n, 0.0);
    for (const auto &row : run.output.rows())
        out.scores[static_cast<VertexId>(std::get<std::int64_t>(row[0]))] =
            std::get<double>(row[1]);
    out.metrics = std::move(run.metrics);
    out.final_max_delta = *last_delta;
    if (opts.mode == PrMode::Fixed) {
        // the fixed iteration count is the intended stop, not an error
        out.metrics.max_steps_exhausted = false;
        out.metrics.converged = true;
    }
    return out;
}

} // namespace detail

inline PrResult pagerank(const Graph &graph, Engine engine, const PrOptions &opts = {}) {
    detail::validate_alpha(opts.alpha);
    const auto assignment = resolve_assignment(graph, opts);
    const VertexId n = graph.num_vertices();

    switch (engine) {
    case Engine::Pregel: {
        detail::PregelPrProgram program{opts.alpha, opts.mode, opts.iterations, opts.tolerance,
                                        opts.use_combiner};
        PregelOptions popts;
        popts.max_supersteps =
            opts.mode == PrMode::Fixed ? opts.iterations + 2 : opts.max_rounds;
        popts.parallel = opts.parallel;
        auto run = run_pregel(graph, assignment, program, popts);
        PrResult out;
        out.scores.reserve(n);
        for (const auto &s : run.states)
            out.scores.push_back(s.rank);
        out.final_max_delta = std::get<double>(run.aggregators.at("max_delta"));
        out.metrics = std::move(run.metrics);
        return out;
    }
    case Engine::GasSync: {
        detail::GasPrProgram program(graph, opts.alpha, opts.mode, opts.tolerance,
                                     opts.delta_caching);
        GasOptions gopts;
        gopts.max_iterations = opts.mode == PrMode::Fixed ? opts.iterations : opts.max_rounds;
        gopts.parallel = opts.parallel;
        gopts.delta_caching = opts.delta_caching;
        gopts.verify_cache = opts.verify_cache;
        auto run = run_gas_sync(graph, assignment, program, gopts);
        PrResult out;
        for (const auto &s : run.states)
            out.scores.push_back(s.rank);
        out.final_max_delta = run.metrics.final_max_delta;
        out.metrics = std::move(run.metrics);
        if (opts.mode == PrMode::Fixed) {
            out.metrics.max_steps_exhausted = false;
            out.metrics.converged = true;
        }
        return out;
    }
    case Engine::GasAsync: {
        if (opts.mode == PrMode::Fixed)
            throw std::invalid_argument(
                "pagerank: the asynchronous engine supports tolerance mode only");
        // a vertex only reschedules its neighbors while its own change
        // exceeds the threshold, so unsignaled drift accumulates; a
        // stricter internal threshold keeps the whole run within the
        // requested tolerance of the fixpoint
        const double internal_tolerance = opts.tolerance * opts.alpha / 2.0;
        detail::GasPrProgram program(graph, opts.alpha, opts.mode, internal_tolerance, false);
        GasAsyncOptions gopts;
        gopts.seed = opts.seed;
        gopts.parallel = opts.parallel;
        auto run = run_gas_async(graph, assignment, program, gopts);
        PrResult out;
        for (const auto &s : run.states)
            out.scores.push_back(s.rank);
        // at quiescence the meaningful statistic is the residual: one more
        // synchronous sweep over the final scores
        double residual = 0.0;
        for (VertexId v = 0; v < n; ++v) {
            ExactSum sum;
            for (VertexId u : graph.in_neighbors(v))
                sum.add(out.scores[u] / graph.out_degree(u));
            const double next = opts.alpha + (1.0 - opts.alpha) * sum.value();
            residual = std::max(residual, std::abs(next - out.scores[v]));
        }
        out.final_max_delta = residual;
        out.metrics = std::move(run.metrics);
        out.metrics.final_max_delta = residual;
        return out;
    }
    case Engine::GasMessage:
        throw std::invalid_argument("pagerank: no gas-message variant; use pregel or gas-sync");
    case Engine::GraphCentric: {
        detail::GraphCentricPrProgram program(assignment.k, opts.alpha, opts.mode,
                                              opts.iterations, opts.tolerance);
        GraphCentricOptions gopts;
        gopts.max_supersteps = opts.mode == PrMode::Fixed ? opts.iterations + 2 : opts.max_rounds;
        gopts.parallel = opts.parallel;
        auto run = run_graph_centric(graph, assignment, program, gopts);
        PrResult out;
        for (const auto &s : run.states)
            out.scores.push_back(s.rank);
        out.final_max_delta = std::get<double>(run.aggregators.at("max_delta"));
        out.metrics = std::move(run.metrics);
        return out;
    }
    case Engine::Pact:
        return detail::pr_pact(graph, opts);
    }
    throw std::invalid_argument("pagerank: unknown engine");
}

} // namespace graphsim::algo
