#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <type_traits>
#include <vector>

#include "common.hpp"
#include "exact_sum.hpp"
#include "graph.hpp"
#include "message.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "partition.hpp"

namespace graphsim {

// Gather-Apply-Scatter execution. A gather/scatter program provides:
//
//   using State  = ...;   // equality-comparable
//   using Gather = ...;
//   static constexpr EdgeDir gather_dir / scatter_dir;
//   static constexpr bool delta_correct;      // eligible for delta caching
//   void init(const GasInitView &, State &);
//   Gather gather(const GasEdge<State> &) const;
//   Gather gather_sum(Gather, Gather) const;  // associative + commutative
//   void apply(GasApplyCtx<State> &, const std::optional<Gather> &);
//   void scatter(const GasEdge<State> &, GasScatterCtx<Gather> &) const;
//
// gather and scatter only read vertex data; apply is the sole mutation
// point. The synchronous engine runs the three phases over the active set
// with a barrier between phases; the asynchronous engine schedules one
// vertex at a time from a FIFO queue with de-duplication, and updates are
// immediately visible to later scheduled vertices.

enum class EdgeDir { In, Out, All };

struct GasInitView {
    VertexId id;
    const Graph *graph;

    std::span<const VertexId> neighbors() const { return graph->neighbors(id); }
    std::uint32_t degree() const { return graph->degree(id); }
    std::uint32_t out_degree() const { return graph->out_degree(id); }
};

template <typename State>
class GasEdge {
public:
    GasEdge(const Graph &graph, const std::vector<State> &states, VertexId self, VertexId other,
            std::uint64_t arc_slot)
        : graph_(&graph), states_(&states), self_(self), other_(other), arc_slot_(arc_slot) {}

    VertexId self_id() const { return self_; }
    VertexId other_id() const { return other_; }
    const State &self_state() const { return (*states_)[self_]; }
    const State &other_state() const { return (*states_)[other_]; }
    std::uint32_t self_out_degree() const { return graph_->out_degree(self_); }
    std::uint32_t other_out_degree() const { return graph_->out_degree(other_); }
    std::uint32_t other_degree() const { return graph_->degree(other_); }

    /// Index of this arc in the flat adjacency; keys per-edge attachment
    /// slots. For in-direction iteration it is resolved lazily.
    std::uint64_t arc_slot() const {
        if (arc_slot_ != kNoSlot)
            return arc_slot_;
        const auto nb = graph_->out_neighbors(self_);
        const auto it = std::lower_bound(nb.begin(), nb.end(), other_);
        return graph_->arc_index(self_, static_cast<std::size_t>(it - nb.begin()));
    }

    static constexpr std::uint64_t kNoSlot = ~0ULL;

private:
    const Graph *graph_;
    const std::vector<State> *states_;
    VertexId self_;
    VertexId other_;
    std::uint64_t arc_slot_;
};

template <typename State>
class GasApplyCtx {
public:
    GasApplyCtx(VertexId id, State &state, std::uint64_t iteration, double *max_delta)
        : id_(id), state_(&state), iteration_(iteration), max_delta_(max_delta) {}

    VertexId id() const { return id_; }
    State &state() { return *state_; }
    std::uint64_t iteration() const { return iteration_; }

    /// Tolerance-mode programs report |new - old| here; the engine keeps
    /// the maximum of the final sweep in RunMetrics::final_max_delta.
    void report_delta(double d) {
        if (max_delta_ && d > *max_delta_)
            *max_delta_ = d;
    }

private:
    VertexId id_;
    State *state_;
    std::uint64_t iteration_;
    double *max_delta_;
};

template <typename Gather>
class GasScatterCtx {
public:
    struct PostedDelta {
        VertexId target;
        Gather delta;
        bool activate;
    };

    struct Staged {
        std::vector<VertexId> signals;
        std::vector<PostedDelta> deltas;
    };

    GasScatterCtx(Staged &staged, VertexId n, bool changed, bool delta_caching)
        : staged_(&staged), n_(n), changed_(changed), delta_caching_(delta_caching) {}

    bool changed() const { return changed_; }
    bool delta_caching_enabled() const { return delta_caching_; }

    void signal(VertexId target) {
        check(target);
        staged_->signals.push_back(target);
    }

    /// Fold `delta` into the target's cached gather aggregate (if one
    /// exists) and, when `activate` is set, schedule the target. Posting
    /// without activation keeps caches exact for sub-tolerance changes.
    void post_delta(VertexId target, Gather delta, bool activate = true) {
        check(target);
        staged_->deltas.push_back({target, std::move(delta), activate});
    }

private:
    void check(VertexId target) const {
        if (target >= n_)
            throw RoutingError("signal to invalid vertex " + std::to_string(target));
    }

    Staged *staged_;
    VertexId n_;
    bool changed_;
    bool delta_caching_;
};

struct GasOptions {
    bool delta_caching = false;
    std::uint64_t max_iterations = 10000;
    bool parallel = false;
    bool verify_cache = false; // re-gather at apply time and record deviation
    std::vector<VertexId> initial_active; // empty = all vertices
};

struct GasAsyncOptions {
    std::uint64_t max_updates = 50000000;
    std::uint64_t seed = 0;
    bool shuffle = false; // shuffle the initial queue order with the seed
    std::vector<VertexId> initial_order; // overrides the default order if non-empty
    bool parallel = false;
    unsigned threads = 2;
    bool log_applies = false;
};

template <typename State>
struct GasResult {
    std::vector<State> states;
    RunMetrics metrics;
    std::vector<VertexId> apply_log; // filled when log_applies is set
};

namespace detail {

template <typename T>
double gather_as_double(const T &g) {
    if constexpr (std::is_same_v<T, ExactSum>)
        return g.value();
    else if constexpr (std::is_arithmetic_v<T>)
        return static_cast<double>(g);
    else
        return 0.0;
}

template <typename Program>
std::uint64_t gather_read_bytes(const Program &program) {
    if constexpr (requires { program.gather_read_bytes(); })
        return program.gather_read_bytes();
    else
        return sizeof(typename Program::Gather);
}

// Fold the gather over the declared edge direction.
template <typename Program, typename State>
std::optional<typename Program::Gather>
gather_fresh(const Program &program, const Graph &graph, const std::vector<State> &states,
             const PartitionAssignment &assignment, VertexId v, RunMetrics &counters) {
    using Gather = typename Program::Gather;
    std::optional<Gather> agg;
    const WorkerId home = assignment.owner_of(v);
    const std::uint64_t read_bytes = gather_read_bytes(program);
    auto fold = [&](VertexId other, std::uint64_t slot) {
        GasEdge<State> edge(graph, states, v, other, slot);
        Gather g = program.gather(edge);
        if (agg)
            agg = program.gather_sum(std::move(*agg), std::move(g));
        else
            agg = std::move(g);
        if (assignment.owner_of(other) != home) {
            ++counters.messages_sent;
            ++counters.messages_delivered;
            ++counters.messages_remote;
            counters.payload_bytes += read_bytes;
        }
    };
    constexpr EdgeDir dir = Program::gather_dir;
    if (dir == EdgeDir::Out || dir == EdgeDir::All) {
        const auto nb = graph.out_neighbors(v);
        for (std::size_t i = 0; i < nb.size(); ++i)
            fold(nb[i], graph.arc_index(v, i));
    }
    if (dir == EdgeDir::In || (dir == EdgeDir::All && graph.directed())) {
        for (VertexId u : graph.in_neighbors(v))
            fold(u, GasEdge<State>::kNoSlot);
    }
    return agg;
}

template <typename Program, typename State, typename Ctx>
void scatter_edges(Program &program, const Graph &graph, const std::vector<State> &states,
                   VertexId v, Ctx &ctx) {
    constexpr EdgeDir dir = Program::scatter_dir;
    if (dir == EdgeDir::Out || dir == EdgeDir::All) {
        const auto nb = graph.out_neighbors(v);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            GasEdge<State> edge(graph, states, v, nb[i], graph.arc_index(v, i));
            program.scatter(edge, ctx);
        }
    }
    if (dir == EdgeDir::In || (dir == EdgeDir::All && graph.directed())) {
        for (VertexId u : graph.in_neighbors(v)) {
            GasEdge<State> edge(graph, states, v, u, GasEdge<State>::kNoSlot);
            program.scatter(edge, ctx);
        }
    }
}

template <typename Program, typename State>
std::uint64_t init_states(Program &program, const Graph &graph, std::vector<State> &states) {
    std::uint64_t changed = 0;
    for (VertexId v = 0; v < graph.num_vertices(); ++v) {
        const State before = states[v];
        program.init(GasInitView{v, &graph}, states[v]);
        if (!(states[v] == before))
            ++changed;
    }
    return changed;
}

} // namespace detail

/// Synchronous GAS: gather -> barrier -> apply -> barrier -> scatter, the
/// scatter's signals and deltas forming the next iteration's active set.
template <typename Program>
GasResult<typename Program::State> run_gas_sync(const Graph &graph,
                                                const PartitionAssignment &assignment,
                                                Program &program, const GasOptions &opts = {}) {
    using State = typename Program::State;
    using Gather = typename Program::Gather;

    const auto start = std::chrono::steady_clock::now();
    const VertexId n = graph.num_vertices();
    const WorkerId k = assignment.k;
    constexpr bool caching_allowed = Program::delta_correct;
    const bool caching = opts.delta_caching && caching_allowed;

    std::vector<State> states(n);
    RunMetrics metrics;
    metrics.init_updates = detail::init_states(program, graph, states);
    metrics.vertex_updates = metrics.init_updates;

    std::vector<std::optional<Gather>> cache(caching ? n : 0);
    std::vector<std::optional<Gather>> aggregate(n);
    std::vector<std::uint8_t> changed(n, 0);
    std::vector<std::uint8_t> active(n, opts.initial_active.empty() ? 1 : 0);
    std::uint64_t active_count = n;
    if (!opts.initial_active.empty()) {
        active_count = 0;
        for (VertexId v : opts.initial_active) {
            if (v >= n)
                throw RoutingError("initial active set names invalid vertex " +
                                   std::to_string(v));
            if (!active[v]) {
                active[v] = 1;
                ++active_count;
            }
        }
    }

    std::vector<std::vector<VertexId>> worker_vertices(k);
    for (VertexId v = 0; v < n; ++v)
        worker_vertices[assignment.owner_of(v)].push_back(v);

    std::uint64_t iteration = 0;
    while (active_count > 0) {
        if (iteration >= opts.max_iterations) {
            metrics.max_steps_exhausted = true;
            metrics.converged = false;
            break;
        }

        std::vector<RunMetrics> worker_counters(k);
        std::vector<double> worker_delta(k, 0.0);
        std::vector<double> worker_cache_dev(k, 0.0);

        // gather
        run_workers(k, opts.parallel, [&](WorkerId w) {
            for (VertexId v : worker_vertices[w]) {
                if (!active[v])
                    continue;
                if (caching && cache[v].has_value()) {
                    aggregate[v] = cache[v];
                    if (opts.verify_cache) {
                        RunMetrics scratch;
                        auto fresh = detail::gather_fresh(program, graph, states, assignment, v,
                                                          scratch);
                        const double dev =
                            std::abs(detail::gather_as_double(*cache[v]) -
                                     (fresh ? detail::gather_as_double(*fresh) : 0.0));
                        worker_cache_dev[w] = std::max(worker_cache_dev[w], dev);
                    }
                } else {
                    aggregate[v] = detail::gather_fresh(program, graph, states, assignment, v,
                                                        worker_counters[w]);
                    if (caching)
                        cache[v] = aggregate[v];
                }
            }
        });

        // apply
        run_workers(k, opts.parallel, [&](WorkerId w) {
            for (VertexId v : worker_vertices[w]) {
                if (!active[v])
                    continue;
                const State before = states[v];
                GasApplyCtx<State> ctx(v, states[v], iteration, &worker_delta[w]);
                program.apply(ctx, aggregate[v]);
                changed[v] = !(states[v] == before);
                if (changed[v])
                    ++worker_counters[w].vertex_updates;
            }
        });

        // scatter
        std::vector<typename GasScatterCtx<Gather>::Staged> staged(k);
        run_workers(k, opts.parallel, [&](WorkerId w) {
            for (VertexId v : worker_vertices[w]) {
                if (!active[v])
                    continue;
                GasScatterCtx<Gather> ctx(staged[w], n, changed[v] != 0, caching);
                detail::scatter_edges(program, graph, states, v, ctx);
            }
        });

        // barrier: merge staged signals and deltas into the next active set
        metrics.active_vertices_per_superstep.push_back(active_count);
        std::fill(active.begin(), active.end(), 0);
        active_count = 0;
        double sweep_delta = 0.0;
        for (WorkerId w = 0; w < k; ++w) {
            metrics.merge_counters(worker_counters[w]);
            sweep_delta = std::max(sweep_delta, worker_delta[w]);
            metrics.cache_max_deviation =
                std::max(metrics.cache_max_deviation, worker_cache_dev[w]);
            const WorkerId src = w;
            for (VertexId t : staged[w].signals) {
                ++metrics.messages_sent;
                ++metrics.messages_delivered;
                if (assignment.owner_of(t) == src)
                    ++metrics.messages_local;
                else
                    ++metrics.messages_remote;
                if (!active[t]) {
                    active[t] = 1;
                    ++active_count;
                }
            }
            for (auto &posted : staged[w].deltas) {
                ++metrics.messages_sent;
                ++metrics.messages_delivered;
                if (assignment.owner_of(posted.target) == src)
                    ++metrics.messages_local;
                else
                    ++metrics.messages_remote;
                metrics.payload_bytes += detail::gather_read_bytes(program);
                if (caching && cache[posted.target].has_value())
                    cache[posted.target] =
                        program.gather_sum(std::move(*cache[posted.target]),
                                           std::move(posted.delta));
                if (posted.activate && !active[posted.target]) {
                    active[posted.target] = 1;
                    ++active_count;
                }
            }
        }
        metrics.final_max_delta = sweep_delta;
        ++metrics.supersteps;
        ++iteration;
    }

    metrics.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(states), std::move(metrics), {}};
}

/// Asynchronous GAS: a scheduled vertex runs gather-apply-scatter as one
/// unit and its update is immediately visible. Single-threaded mode is
/// fully deterministic given the seed; parallel mode serializes adjacent
/// vertices by neighborhood locking.
template <typename Program>
GasResult<typename Program::State> run_gas_async(const Graph &graph,
                                                 const PartitionAssignment &assignment,
                                                 Program &program,
                                                 const GasAsyncOptions &opts = {}) {
    using State = typename Program::State;
    using Gather = typename Program::Gather;

    const auto start = std::chrono::steady_clock::now();
    const VertexId n = graph.num_vertices();

    std::vector<State> states(n);
    RunMetrics metrics;
    metrics.init_updates = detail::init_states(program, graph, states);
    metrics.vertex_updates = metrics.init_updates;

    std::vector<VertexId> order;
    if (!opts.initial_order.empty()) {
        order = opts.initial_order;
    } else {
        order.resize(n);
        for (VertexId v = 0; v < n; ++v)
            order[v] = v;
        if (opts.shuffle) {
            Rng rng(opts.seed);
            rng.shuffle(order);
        }
    }

    std::deque<VertexId> queue(order.begin(), order.end());
    std::vector<std::uint8_t> in_queue(n, 0);
    for (VertexId v : order)
        in_queue[v] = 1;

    std::vector<VertexId> apply_log;
    std::vector<double> last_delta(n, 0.0);
    std::uint64_t executed = 0;

    auto run_unit = [&](VertexId v, RunMetrics &counters, double *delta_slot) {
        auto agg = detail::gather_fresh(program, graph, states, assignment, v, counters);
        const State before = states[v];
        double delta = 0.0;
        GasApplyCtx<State> ctx(v, states[v], executed, &delta);
        program.apply(ctx, agg);
        *delta_slot = delta;
        const bool changed = !(states[v] == before);
        if (changed)
            ++counters.vertex_updates;
        return changed;
    };

    if (!opts.parallel) {
        while (!queue.empty()) {
            if (executed >= opts.max_updates) {
                metrics.max_steps_exhausted = true;
                metrics.converged = false;
                break;
            }
            const VertexId v = queue.front();
            queue.pop_front();
            in_queue[v] = 0;
            const bool changed = run_unit(v, metrics, &last_delta[v]);
            ++executed;
            if (opts.log_applies)
                apply_log.push_back(v);
            typename GasScatterCtx<Gather>::Staged staged;
            GasScatterCtx<Gather> ctx(staged, n, changed, false);
            detail::scatter_edges(program, graph, states, v, ctx);
            auto enqueue = [&](VertexId t) {
                ++metrics.messages_sent;
                ++metrics.messages_delivered;
                if (assignment.owner_of(t) == assignment.owner_of(v))
                    ++metrics.messages_local;
                else
                    ++metrics.messages_remote;
                if (!in_queue[t]) {
                    in_queue[t] = 1;
                    queue.push_back(t);
                }
            };
            for (VertexId t : staged.signals)
                enqueue(t);
            for (auto &posted : staged.deltas)
                if (posted.activate)
                    enqueue(posted.target); // no cache here; a delta acts as a signal
        }
    } else {
        // Parallel mode: no two adjacent vertices run their unit
        // concurrently (vertex + neighborhood locks, acquired in id order).
        std::vector<std::mutex> vertex_locks(n);
        std::mutex queue_mutex;
        std::condition_variable cv;
        std::mutex log_mutex;
        unsigned busy = 0;
        bool exhausted = false;
        std::vector<RunMetrics> thread_counters(opts.threads);

        auto worker = [&](unsigned tid) {
            for (;;) {
                VertexId v;
                {
                    std::unique_lock<std::mutex> lock(queue_mutex);
                    cv.wait(lock, [&] { return !queue.empty() || busy == 0; });
                    if (queue.empty())
                        return;
                    if (executed >= opts.max_updates) {
                        exhausted = true;
                        queue.clear();
                        cv.notify_all();
                        return;
                    }
                    v = queue.front();
                    queue.pop_front();
                    in_queue[v] = 0;
                    ++executed;
                    ++busy;
                }

                std::vector<VertexId> locks{v};
                for (VertexId u : graph.out_neighbors(v))
                    locks.push_back(u);
                for (VertexId u : graph.in_neighbors(v))
                    locks.push_back(u);
                std::sort(locks.begin(), locks.end());
                locks.erase(std::unique(locks.begin(), locks.end()), locks.end());
                for (VertexId u : locks)
                    vertex_locks[u].lock();

                double delta = 0.0;
                const bool changed = run_unit(v, thread_counters[tid], &delta);
                if (opts.log_applies) {
                    std::lock_guard<std::mutex> lg(log_mutex);
                    apply_log.push_back(v);
                }
                typename GasScatterCtx<Gather>::Staged staged;
                GasScatterCtx<Gather> ctx(staged, n, changed, false);
                detail::scatter_edges(program, graph, states, v, ctx);

                for (auto it = locks.rbegin(); it != locks.rend(); ++it)
                    vertex_locks[*it].unlock();

                {
                    std::lock_guard<std::mutex> lock(queue_mutex);
                    last_delta[v] = delta;
                    auto enqueue = [&](VertexId t) {
                        ++thread_counters[tid].messages_sent;
                        ++thread_counters[tid].messages_delivered;
                        if (assignment.owner_of(t) == assignment.owner_of(v))
                            ++thread_counters[tid].messages_local;
                        else
                            ++thread_counters[tid].messages_remote;
                        if (!in_queue[t]) {
                            in_queue[t] = 1;
                            queue.push_back(t);
                        }
                    };
                    for (VertexId t : staged.signals)
                        enqueue(t);
                    for (auto &posted : staged.deltas)
                        if (posted.activate)
                            enqueue(posted.target);
                    --busy;
                }
                cv.notify_all();
            }
        };

        std::vector<std::thread> threads;
        for (unsigned t = 0; t < std::max(1u, opts.threads); ++t)
            threads.emplace_back(worker, t);
        for (auto &t : threads)
            t.join();
        for (const auto &c : thread_counters)
            metrics.merge_counters(c);
        if (exhausted) {
            metrics.max_steps_exhausted = true;
            metrics.converged = false;
        }
    }

    double final_delta = 0.0;
    for (VertexId v = 0; v < n; ++v)
        final_delta = std::max(final_delta, last_delta[v]);
    metrics.final_max_delta = final_delta;
    metrics.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(states), std::move(metrics), std::move(apply_log)};
}

// Message-based GAS programs consume a combined inbox instead of gather
// results:
//
//   using State = ...; using Message = ...;
//   static constexpr EdgeDir scatter_dir;
//   void init(const GasInitView &, State &);
//   Message combine(const Message &, const Message &) const;
//   void apply(GasApplyCtx<State> &, const std::optional<Message> &);
//   void scatter(const GasEdge<State> &, GasMessageScatterCtx<Message> &) const;

template <typename Message>
class GasMessageScatterCtx {
public:
    GasMessageScatterCtx(Outbox<Message> &outbox, VertexId n, bool changed)
        : outbox_(&outbox), n_(n), changed_(changed) {}

    bool changed() const { return changed_; }

    void send(VertexId dst, Message payload) {
        if (dst >= n_)
            throw RoutingError("message to invalid vertex " + std::to_string(dst));
        outbox_->send(dst, std::move(payload));
    }

private:
    Outbox<Message> *outbox_;
    VertexId n_;
    bool changed_;
};

enum class GasEngineKind { Sync, Async };

/// Pregel-style message API on top of the GAS scheduling semantics.
/// Messages to a vertex are combined with the program's combiner before
/// its apply.
template <typename Program>
GasResult<typename Program::State>
run_gas_message_api(const Graph &graph, const PartitionAssignment &assignment, Program &program,
                    GasEngineKind kind, const GasOptions &sync_opts = {},
                    const GasAsyncOptions &async_opts = {}) {
    using State = typename Program::State;
    using Message = typename Program::Message;

    const auto start = std::chrono::steady_clock::now();
    const VertexId n = graph.num_vertices();
    const WorkerId k = assignment.k;

    std::vector<State> states(n);
    RunMetrics metrics;
    metrics.init_updates = detail::init_states(program, graph, states);
    metrics.vertex_updates = metrics.init_updates;

    PayloadSizeFn<Message> payload_size;
    if constexpr (requires { program.message_bytes(std::declval<const Message &>()); })
        payload_size = [&program](const Message &m) { return program.message_bytes(m); };
    else
        payload_size = [](const Message &m) { return default_payload_size(m); };

    if (kind == GasEngineKind::Sync) {
        std::vector<std::vector<VertexId>> worker_vertices(k);
        for (VertexId v = 0; v < n; ++v)
            worker_vertices[assignment.owner_of(v)].push_back(v);
        const std::optional<CombinerFn<Message>> combiner =
            CombinerFn<Message>([&program](const Message &a, const Message &b) {
                return program.combine(a, b);
            });

        std::vector<std::vector<Message>> inboxes(n);
        std::vector<std::uint8_t> changed(n, 1); // bootstrap scatter for everyone

        // bootstrap: every vertex announces its initial state
        {
            std::vector<Outbox<Message>> outboxes;
            for (WorkerId w = 0; w < k; ++w)
                outboxes.emplace_back(w);
            run_workers(k, sync_opts.parallel, [&](WorkerId w) {
                for (VertexId v : worker_vertices[w]) {
                    GasMessageScatterCtx<Message> ctx(outboxes[w], n, true);
                    detail::scatter_edges(program, graph, states, v, ctx);
                }
            });
            exchange(outboxes, assignment, combiner, inboxes, metrics, payload_size);
            metrics.active_vertices_per_superstep.push_back(n);
            ++metrics.supersteps;
        }

        std::uint64_t iteration = 1;
        for (;;) {
            std::vector<VertexId> active;
            for (VertexId v = 0; v < n; ++v)
                if (!inboxes[v].empty())
                    active.push_back(v);
            if (active.empty())
                break;
            if (iteration >= sync_opts.max_iterations) {
                metrics.max_steps_exhausted = true;
                metrics.converged = false;
                break;
            }
            std::vector<std::uint64_t> updates(k, 0);
            std::vector<double> worker_delta(k, 0.0);
            run_workers(k, sync_opts.parallel, [&](WorkerId w) {
                for (VertexId v : worker_vertices[w]) {
                    if (inboxes[v].empty())
                        continue;
                    std::optional<Message> folded;
                    for (auto &m : inboxes[v])
                        folded = folded ? program.combine(*folded, m) : std::move(m);
                    const State before = states[v];
                    GasApplyCtx<State> ctx(v, states[v], iteration, &worker_delta[w]);
                    program.apply(ctx, folded);
                    changed[v] = !(states[v] == before);
                    if (changed[v])
                        ++updates[w];
                }
            });
            std::vector<Outbox<Message>> outboxes;
            for (WorkerId w = 0; w < k; ++w)
                outboxes.emplace_back(w);
            run_workers(k, sync_opts.parallel, [&](WorkerId w) {
                for (VertexId v : worker_vertices[w]) {
                    if (inboxes[v].empty())
                        continue;
                    GasMessageScatterCtx<Message> ctx(outboxes[w], n, changed[v] != 0);
                    detail::scatter_edges(program, graph, states, v, ctx);
                }
            });
            metrics.active_vertices_per_superstep.push_back(active.size());
            double sweep = 0.0;
            for (WorkerId w = 0; w < k; ++w) {
                metrics.vertex_updates += updates[w];
                sweep = std::max(sweep, worker_delta[w]);
            }
            metrics.final_max_delta = sweep;
            for (VertexId v : active)
                inboxes[v].clear();
            exchange(outboxes, assignment, combiner, inboxes, metrics, payload_size);
            ++metrics.supersteps;
            ++iteration;
        }
        metrics.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return {std::move(states), std::move(metrics), {}};
    }

    // Async message engine: pending slot per vertex, combined on deposit.
    std::vector<std::optional<Message>> pending(n);
    std::vector<std::uint8_t> first_visit(n, 1);
    std::deque<VertexId> queue;
    std::vector<std::uint8_t> in_queue(n, 1);
    {
        std::vector<VertexId> order(n);
        for (VertexId v = 0; v < n; ++v)
            order[v] = v;
        if (async_opts.shuffle) {
            Rng rng(async_opts.seed);
            rng.shuffle(order);
        }
        queue.assign(order.begin(), order.end());
    }
    std::uint64_t executed = 0;
    while (!queue.empty()) {
        if (executed >= async_opts.max_updates) {
            metrics.max_steps_exhausted = true;
            metrics.converged = false;
            break;
        }
        const VertexId v = queue.front();
        queue.pop_front();
        in_queue[v] = 0;
        std::optional<Message> msg = std::move(pending[v]);
        pending[v].reset();
        bool changed = first_visit[v] != 0;
        first_visit[v] = 0;
        if (msg) {
            const State before = states[v];
            double delta = 0.0;
            GasApplyCtx<State> ctx(v, states[v], executed, &delta);
            program.apply(ctx, msg);
            changed = !(states[v] == before);
            if (changed)
                ++metrics.vertex_updates;
        }
        ++executed;
        if (changed) {
            Outbox<Message> staging(assignment.owner_of(v));
            GasMessageScatterCtx<Message> ctx(staging, n, changed);
            detail::scatter_edges(program, graph, states, v, ctx);
            for (auto &env : staging.envelopes()) {
                ++metrics.messages_sent;
                if (pending[env.dst]) {
                    *pending[env.dst] = program.combine(*pending[env.dst], env.payload);
                } else {
                    pending[env.dst] = std::move(env.payload);
                    ++metrics.messages_delivered;
                    if (assignment.owner_of(env.dst) == env.src_worker)
                        ++metrics.messages_local;
                    else
                        ++metrics.messages_remote;
                    metrics.payload_bytes += payload_size(*pending[env.dst]);
                }
                if (!in_queue[env.dst]) {
                    in_queue[env.dst] = 1;
                    queue.push_back(env.dst);
                }
            }
        }
    }
    metrics.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(states), std::move(metrics), {}};
}

} // namespace graphsim
