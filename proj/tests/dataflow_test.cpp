#include <doctest.h>

#include <map>
#include <sstream>

#include "graphsim/algorithms/components.hpp"
#include "graphsim/dataflow.hpp"
#include "test_support.hpp"

using namespace graphsim;
using namespace graphsim::dataflow;

namespace {

Dataset int_pairs(std::vector<std::pair<std::int64_t, std::int64_t>> rows) {
    Dataset d(Schema{{FieldType::Int, FieldType::Int}});
    for (auto [a, b] : rows)
        d.append({a, b});
    return d;
}

} // namespace

TEST_CASE("dataflow: joining with an empty dataset is empty") {
    Dataset left(Schema{{FieldType::Int, FieldType::Text}});
    left.append({std::int64_t{1}, std::string("a")});
    Dataset right(Schema{{FieldType::Int, FieldType::Int}});

    DataflowBuilder b;
    const auto l = b.source("left", left.schema());
    const auto r = b.source("right", right.schema());
    const auto joined =
        b.join(l, r, {0}, {0}, Schema{{FieldType::Int}},
               [](const Tuple &x, const Tuple &, Emitter &emit) { emit({x[0]}); });
    auto flow = std::move(b).build();
    const auto result = execute_dag(flow, joined, {{"left", left}, {"right", right}}, 2);
    CHECK(result.output.size() == 0);
}

TEST_CASE("dataflow: group_by with most_frequent keeps the majority label") {
    const Dataset in = int_pairs({{1, 7}, {1, 7}, {1, 9}});
    DataflowBuilder b;
    const auto src = b.source("in", in.schema());
    const auto grouped = b.group_aggregate(src, {0}, AggregateSpec::most_frequent(1));
    auto flow = std::move(b).build();
    const auto result = execute_dag(flow, grouped, {{"in", in}}, 1);
    REQUIRE(result.output.size() == 1);
    CHECK(std::get<std::int64_t>(result.output.rows()[0][0]) == 1);
    CHECK(std::get<std::int64_t>(result.output.rows()[0][1]) == 7);
}

TEST_CASE("dataflow: most_frequent breaks ties toward the minimum label") {
    const Dataset in = int_pairs({{1, 9}, {1, 7}, {1, 9}, {1, 7}});
    DataflowBuilder b;
    const auto src = b.source("in", in.schema());
    const auto grouped = b.group_aggregate(src, {0}, AggregateSpec::most_frequent(1));
    auto flow = std::move(b).build();
    const auto result = execute_dag(flow, grouped, {{"in", in}}, 3);
    REQUIRE(result.output.size() == 1);
    CHECK(std::get<std::int64_t>(result.output.rows()[0][1]) == 7);
}

TEST_CASE("dataflow: cc plan on triangle plus isolated vertex") {
    const Graph g = Graph::from_dense_edges(4, {{0, 1}, {1, 2}, {0, 2}}, false);
    algo::CcOptions opts;
    auto run = algo::connected_components(g, algo::Engine::Pact, opts);
    CHECK(run.labels == std::vector<VertexId>{0, 0, 0, 3});
    CHECK(run.metrics.converged);
}

TEST_CASE("dataflow: operators agree with a naive reference on random data") {
    Rng rng(55);
    for (int round = 0; round < 20; ++round) {
        const std::size_t rows = 1 + rng.next_below(1000);
        std::vector<std::pair<std::int64_t, std::int64_t>> data;
        for (std::size_t i = 0; i < rows; ++i)
            data.emplace_back(static_cast<std::int64_t>(rng.next_below(20)),
                              static_cast<std::int64_t>(rng.next_below(100)));
        const Dataset in = int_pairs(data);

        // reference: per-key count, sum, min
        std::map<std::int64_t, std::int64_t> count, sum, min;
        for (auto [k, v] : data) {
            ++count[k];
            sum[k] += v;
            min.emplace(k, v);
            min[k] = std::min(min[k], v);
        }

        const unsigned parallelism = 1 + static_cast<unsigned>(rng.next_below(8));
        auto run_agg = [&](AggregateSpec spec) {
            DataflowBuilder b;
            const auto src = b.source("in", in.schema());
            const auto grouped = b.group_aggregate(src, {0}, std::move(spec));
            auto flow = std::move(b).build();
            return execute_dag(flow, grouped, {{"in", in}}, parallelism).output;
        };

        const auto counts = run_agg(AggregateSpec::count());
        REQUIRE(counts.size() == count.size());
        for (const auto &row : counts.rows())
            CHECK(count.at(std::get<std::int64_t>(row[0])) == std::get<std::int64_t>(row[1]));

        const auto sums = run_agg(AggregateSpec::sum(1));
        for (const auto &row : sums.rows())
            CHECK(sum.at(std::get<std::int64_t>(row[0])) == std::get<std::int64_t>(row[1]));

        const auto mins = run_agg(AggregateSpec::min(1));
        for (const auto &row : mins.rows())
            CHECK(min.at(std::get<std::int64_t>(row[0])) == std::get<std::int64_t>(row[1]));

        // join versus nested loops on a second small dataset
        std::vector<std::pair<std::int64_t, std::int64_t>> other;
        for (std::size_t i = 0; i < 50; ++i)
            other.emplace_back(static_cast<std::int64_t>(rng.next_below(20)),
                               static_cast<std::int64_t>(i));
        const Dataset right = int_pairs(other);
        DataflowBuilder b;
        const auto l = b.source("l", in.schema());
        const auto r = b.source("r", right.schema());
        const auto joined = b.join(l, r, {0}, {0},
                                   Schema{{FieldType::Int, FieldType::Int, FieldType::Int}},
                                   [](const Tuple &x, const Tuple &y, Emitter &emit) {
                                       emit({x[0], x[1], y[1]});
                                   });
        auto flow = std::move(b).build();
        const auto joined_out = execute_dag(flow, joined, {{"l", in}, {"r", right}}, parallelism);
        std::size_t expected = 0;
        for (auto [k, v] : data)
            for (auto [k2, v2] : other)
                expected += k == k2;
        CHECK(joined_out.output.size() == expected);
    }
}

TEST_CASE("dataflow: parallelism changes metrics, never results") {
    const Graph g = testsupport::random_graph(60, 0.07, 66);
    algo::CcOptions base;
    base.workers = 1;
    const auto reference = algo::connected_components(g, algo::Engine::Pact, base);
    for (WorkerId p : {2u, 4u, 8u}) {
        algo::CcOptions opts;
        opts.workers = p;
        const auto run = algo::connected_components(g, algo::Engine::Pact, opts);
        CHECK(run.labels == reference.labels);
    }
}

TEST_CASE("dataflow: bulk iteration reaches a fixpoint and reports convergence") {
    const Graph g = testsupport::random_graph(40, 0.08, 77);
    algo::CcOptions opts;
    auto run = algo::connected_components(g, algo::Engine::Pact, opts);
    CHECK(run.metrics.converged);
    CHECK_FALSE(run.metrics.max_steps_exhausted);

    // starving the loop of iterations is flagged, not an error
    REQUIRE(run.metrics.supersteps > 1);
    algo::CcOptions starved;
    starved.max_rounds = 1;
    auto short_run = algo::connected_components(g, algo::Engine::Pact, starved);
    CHECK(short_run.metrics.max_steps_exhausted);
    CHECK_FALSE(short_run.metrics.converged);
}

TEST_CASE("dataflow: plans are validated before execution") {
    DataflowBuilder b;
    const auto ints = b.source("a", Schema{{FieldType::Int, FieldType::Int}});
    const auto text = b.source("b", Schema{{FieldType::Text}});
    CHECK_THROWS_AS(b.join(ints, text, {0}, {0}, Schema{{FieldType::Int}},
                           [](const Tuple &, const Tuple &, Emitter &) {}),
                    PlanError);
    CHECK_THROWS_AS(b.join(ints, ints, {5}, {0}, Schema{{FieldType::Int}},
                           [](const Tuple &, const Tuple &, Emitter &) {}),
                    PlanError);
    CHECK_THROWS_AS(b.union_of(ints, text), PlanError);
    CHECK_THROWS_AS(b.group_aggregate(ints, {9}, AggregateSpec::count()), PlanError);

    // runtime schema violations from user functions are caught as well
    const Dataset in = int_pairs({{1, 2}});
    DataflowBuilder c;
    const auto src = c.source("in", in.schema());
    const auto bad = c.map(src, Schema{{FieldType::Int}},
                           [](const Tuple &, Emitter &emit) { emit({std::string("oops")}); });
    auto flow = std::move(c).build();
    CHECK_THROWS_AS(execute_dag(flow, bad, {{"in", in}}, 1), PlanError);
}

TEST_CASE("dataflow: named sinks materialize every output") {
    const Dataset in = int_pairs({{1, 10}, {2, 20}, {1, 30}});
    DataflowBuilder b;
    const auto src = b.source("in", in.schema());
    b.sink(b.group_aggregate(src, {0}, AggregateSpec::count()), "counts");
    b.sink(b.group_aggregate(src, {0}, AggregateSpec::sum(1)), "sums");
    auto flow = std::move(b).build();
    const auto run = execute_dag(flow, {{"in", in}}, 2);
    REQUIRE(run.outputs.count("counts") == 1);
    REQUIRE(run.outputs.count("sums") == 1);
    CHECK(run.outputs.at("counts").size() == 2);
    for (const auto &row : run.outputs.at("sums").rows())
        if (std::get<std::int64_t>(row[0]) == 1)
            CHECK(std::get<std::int64_t>(row[1]) == 40);

    DataflowBuilder no_sink;
    const auto only = no_sink.source("in", in.schema());
    (void)only;
    auto empty_flow = std::move(no_sink).build();
    CHECK_THROWS_AS(execute_dag(empty_flow, {{"in", in}}, 1), PlanError);
}

TEST_CASE("dataflow: dataset csv import and export") {
    Dataset d(Schema{{FieldType::Int, FieldType::Double, FieldType::Text}});
    d.append({std::int64_t{3}, 0.25, std::string("label")});
    d.append({std::int64_t{-1}, 1e-9, std::string("x")});
    std::ostringstream out;
    d.to_csv(out);
    std::istringstream in(out.str());
    const Dataset back = Dataset::from_csv(in, d.schema());
    REQUIRE(back.size() == d.size());
    CHECK(back.rows() == d.rows());

    std::istringstream bad("1,nope\n");
    CHECK_THROWS_AS(Dataset::from_csv(bad, Schema{{FieldType::Int, FieldType::Double}}),
                    ParseError);
    std::istringstream wrong_arity("1\n");
    CHECK_THROWS_AS(Dataset::from_csv(wrong_arity, Schema{{FieldType::Int, FieldType::Int}}),
                    ParseError);
}
