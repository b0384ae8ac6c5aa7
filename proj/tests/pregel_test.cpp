#include <doctest.h>

#include <filesystem>

#include "graphsim/algorithms/components.hpp"
#include "graphsim/algorithms/oracles.hpp"
#include "graphsim/algorithms/pagerank.hpp"
#include "graphsim/pregel.hpp"
#include "test_support.hpp"

using namespace graphsim;
using namespace graphsim::algo;

namespace {

template <typename Program>
auto run_cc(const Graph &g, WorkerId k, PregelOptions opts = {}) {
    Program program;
    const auto a = partition_hash(g, k, 0);
    return run_pregel(g, a, program, opts);
}

} // namespace

TEST_CASE("pregel cc: single edge settles to the smaller id") {
    const Graph g = testsupport::path_graph(2);
    auto result = run_cc<algo::detail::PregelCcProgram>(g, 1);
    CHECK(result.states[0].component == 0);
    CHECK(result.states[1].component == 0);
    // superstep 0: both init and send; superstep 1: vertex 1 improves and
    // notifies; superstep 2: vertex 0 sees no smaller label and the run
    // goes quiet
    CHECK(result.metrics.supersteps == 3);
    CHECK(result.metrics.active_vertices_per_superstep ==
          std::vector<std::uint64_t>{2, 2, 1});
    CHECK(result.metrics.vertex_updates == 3); // two inits + one improvement
}

TEST_CASE("pregel: empty graph halts immediately with zero compute calls") {
    const Graph g;
    auto result = run_cc<algo::detail::PregelCcProgram>(g, 1);
    CHECK(result.metrics.supersteps == 0);
    CHECK(result.metrics.vertex_updates == 0);
    CHECK(result.metrics.active_vertices_per_superstep.empty());
}

TEST_CASE("pregel cc: two disjoint edges match the oracle") {
    const Graph g = Graph::from_dense_edges(4, {{0, 1}, {2, 3}}, false);
    auto result = run_cc<algo::detail::PregelCcProgram>(g, 2);
    const auto expected = oracle_components(g);
    for (VertexId v = 0; v < 4; ++v)
        CHECK(result.states[v].component == expected[v]);
}

namespace {

// each vertex sends its id every superstep; compute asserts that what
// arrives is exactly what the neighbors sent one superstep earlier
struct IsolationProbe {
    struct State {
        std::uint64_t step = 0;

        friend bool operator==(const State &, const State &) = default;
    };
    using Message = std::uint64_t;

    bool ok = true;

    void compute(PregelVertex<State> &v, std::span<const Message> messages,
                 PregelContext<Message> &ctx) {
        if (ctx.superstep() > 0) {
            // every neighbor sent (its id * 1000 + previous superstep)
            if (messages.size() != v.neighbors().size())
                ok = false;
            for (Message m : messages)
                if (m % 1000 != ctx.superstep() - 1)
                    ok = false;
        }
        v.state().step = ctx.superstep();
        if (ctx.superstep() < 3)
            ctx.send_to_all_neighbors(v.id() * 1000 + ctx.superstep());
        else
            ctx.vote_to_halt();
    }
};

} // namespace

TEST_CASE("pregel: messages sent in superstep s arrive in s+1, never earlier") {
    const Graph g = testsupport::random_graph(30, 0.2, 3);
    IsolationProbe program;
    const auto a = partition_hash(g, 3, 0);
    run_pregel(g, a, program);
    CHECK(program.ok);
}

TEST_CASE("pregel: halting soundness - one more allowed superstep changes nothing") {
    const Graph g = testsupport::random_graph(50, 0.08, 5);
    PregelOptions opts;
    auto r1 = run_cc<algo::detail::PregelCcProgram>(g, 2, opts);
    REQUIRE_FALSE(r1.metrics.max_steps_exhausted);
    opts.max_supersteps = r1.metrics.supersteps + 1;
    auto r2 = run_cc<algo::detail::PregelCcProgram>(g, 2, opts);
    for (VertexId v = 0; v < g.num_vertices(); ++v)
        CHECK(r1.states[v].component == r2.states[v].component);
}

TEST_CASE("pregel: worker-count invariance for deterministic programs") {
    const Graph g = testsupport::random_graph(80, 0.05, 7);
    auto reference = run_cc<algo::detail::PregelCcProgram>(g, 1);
    for (WorkerId k : {2u, 4u, 8u}) {
        auto other = run_cc<algo::detail::PregelCcProgram>(g, k);
        for (VertexId v = 0; v < g.num_vertices(); ++v)
            CHECK(reference.states[v].component == other.states[v].component);
    }
}

namespace {

struct PingPong { // never halts: exercises the superstep guard
    struct State {
        std::uint64_t count = 0;

        friend bool operator==(const State &, const State &) = default;
    };
    using Message = int;

    void compute(PregelVertex<State> &v, std::span<const Message>, PregelContext<Message> &ctx) {
        ++v.state().count;
        ctx.send_to_all_neighbors(1);
    }
};

struct BadRouter {
    struct State {
        int x = 0;

        friend bool operator==(const State &, const State &) = default;
    };
    using Message = int;

    void compute(PregelVertex<State> &, std::span<const Message>, PregelContext<Message> &ctx) {
        ctx.send(1000000, 1);
        ctx.vote_to_halt();
    }
};

struct AggregatorProbe {
    struct State {
        std::int64_t seen = -1;

        friend bool operator==(const State &, const State &) = default;
    };
    using Message = int;

    void register_aggregators(AggregatorBoard &board) const {
        board.register_aggregator("count", AggKind::IntSum, std::int64_t{0});
    }

    void compute(PregelVertex<State> &v, std::span<const Message>, PregelContext<Message> &ctx) {
        // the value visible now was committed at the previous barrier
        v.state().seen = std::get<std::int64_t>(ctx.aggregator_value("count"));
        ctx.aggregate("count", std::int64_t{1});
        if (ctx.superstep() >= 2)
            ctx.vote_to_halt();
        else
            ctx.send_to_all_neighbors(0);
    }
};

struct MasterHalter {
    struct State {
        std::uint64_t steps = 0;

        friend bool operator==(const State &, const State &) = default;
    };
    using Message = int;

    void compute(PregelVertex<State> &v, std::span<const Message>, PregelContext<Message> &ctx) {
        ++v.state().steps;
        ctx.send_to_all_neighbors(0);
    }

    void master_compute(PregelMasterContext &ctx) {
        if (ctx.superstep() == 4)
            ctx.halt();
    }
};

} // namespace

TEST_CASE("pregel: exhausting max_supersteps is flagged, not an error") {
    const Graph g = testsupport::path_graph(4);
    PingPong program;
    PregelOptions opts;
    opts.max_supersteps = 5;
    const auto a = partition_hash(g, 1, 0);
    auto result = run_pregel(g, a, program, opts);
    CHECK(result.metrics.max_steps_exhausted);
    CHECK_FALSE(result.metrics.converged);
    CHECK(result.metrics.supersteps == 5);
}

TEST_CASE("pregel: message to nonexistent vertex raises a routing error") {
    const Graph g = testsupport::path_graph(3);
    BadRouter program;
    const auto a = partition_hash(g, 1, 0);
    CHECK_THROWS_AS(run_pregel(g, a, program), RoutingError);
}

TEST_CASE("pregel: aggregator values become readable one superstep later") {
    const Graph g = testsupport::path_graph(5);
    AggregatorProbe program;
    const auto a = partition_hash(g, 2, 0);
    auto result = run_pregel(g, a, program);
    // superstep 0 saw the initial value; later supersteps see n
    for (const auto &s : result.states)
        CHECK(s.seen == 5);
    CHECK(std::get<std::int64_t>(result.aggregators.at("count")) == 5);
}

TEST_CASE("pregel: master compute can halt the run") {
    const Graph g = testsupport::path_graph(4);
    MasterHalter program;
    const auto a = partition_hash(g, 1, 0);
    auto result = run_pregel(g, a, program);
    CHECK(result.metrics.supersteps == 5); // supersteps 0..4, then the master stops
    for (const auto &s : result.states)
        CHECK(s.steps == 5);
}

TEST_CASE("pregel: parallel workers produce the single-threaded result") {
    const Graph g = testsupport::random_graph(100, 0.05, 11);
    PregelOptions seq, par;
    par.parallel = true;
    auto r1 = run_cc<algo::detail::PregelCcProgram>(g, 4, seq);
    auto r2 = run_cc<algo::detail::PregelCcProgram>(g, 4, par);
    for (VertexId v = 0; v < g.num_vertices(); ++v)
        CHECK(r1.states[v].component == r2.states[v].component);
    CHECK(r1.metrics.messages_sent == r2.metrics.messages_sent);
    CHECK(r1.metrics.vertex_updates == r2.metrics.vertex_updates);

    const Graph d = testsupport::random_graph(60, 0.06, 13, /*directed=*/true);
    PrOptions popts;
    popts.workers = 4;
    popts.iterations = 20;
    auto p1 = pagerank(d, Engine::Pregel, popts);
    popts.parallel = true;
    auto p2 = pagerank(d, Engine::Pregel, popts);
    for (VertexId v = 0; v < d.num_vertices(); ++v)
        CHECK(p1.scores[v] == p2.scores[v]);
}

TEST_CASE("pregel checkpointing: files per interval, restore equivalence, recovery") {
    const auto dir = std::filesystem::temp_directory_path() / "graphsim_pregel_ckpt";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    const Graph g = testsupport::random_graph(60, 0.06, 17);

    CcOptions plain;
    plain.workers = 2;
    auto reference = connected_components(g, Engine::Pregel, plain);

    SUBCASE("interval 1 writes one checkpoint per superstep") {
        CcOptions opts = plain;
        opts.checkpoint_interval = 1;
        opts.checkpoint_dir = dir;
        auto run = connected_components(g, Engine::Pregel, opts);
        std::size_t files = 0;
        for (const auto &entry : std::filesystem::directory_iterator(dir))
            files += entry.path().extension() == ".ckpt";
        CHECK(files == run.metrics.supersteps);
        CHECK(run.labels == reference.labels);
    }

    SUBCASE("kill and recover reproduces the failure-free labels") {
        CcOptions opts = plain;
        opts.checkpoint_interval = 2;
        opts.checkpoint_dir = dir;
        opts.kill_at_superstep = 3;
        auto run = connected_components(g, Engine::Pregel, opts);
        CHECK(run.labels == reference.labels);
    }

    SUBCASE("kill without any checkpoint restarts from scratch") {
        CcOptions opts = plain;
        opts.kill_at_superstep = 1;
        auto run = connected_components(g, Engine::Pregel, opts);
        CHECK(run.labels == reference.labels);
    }

    std::filesystem::remove_all(dir);
}
