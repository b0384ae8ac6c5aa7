#include <doctest.h>

#include <sstream>

#include "graphsim/bench.hpp"
#include "test_support.hpp"

using namespace graphsim;
using namespace graphsim::bench;

namespace {

BenchmarkSpec dm_spec(const std::string &algorithm, const std::string &engine) {
    BenchmarkSpec spec;
    spec.generate = true;
    spec.generate_vertices = 80;
    spec.algorithm = algorithm;
    spec.engine = engine;
    spec.seed = 5;
    return spec;
}

} // namespace

TEST_CASE("bench: unknown combinations are rejected with the valid pairs") {
    auto spec = dm_spec("clustering-approx", "pact");
    CHECK_THROWS_WITH_AS(run_benchmark(spec), doctest::Contains("valid algorithm/engine pairs"),
                         std::invalid_argument);
    spec = dm_spec("nonsense", "pregel");
    CHECK_THROWS_AS(run_benchmark(spec), std::invalid_argument);
    spec = dm_spec("pagerank", "gas-async"); // fixed mode is not meaningful there
    CHECK_THROWS_AS(run_benchmark(spec), std::invalid_argument);
    spec = dm_spec("cc", "gas-sync");
    spec.checkpoint_every = 2; // checkpoints are a pregel feature
    CHECK_THROWS_AS(run_benchmark(spec), std::invalid_argument);
}

TEST_CASE("bench: csv output is header plus one line per record") {
    auto spec = dm_spec("cc", "pregel");
    const auto records = run_benchmark(spec);
    REQUIRE(records.size() == 1);
    std::ostringstream out;
    emit_metrics(records, "csv", out);
    const std::string text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.find("engine,algorithm,workers") == 0);
}

TEST_CASE("bench: emitting zero records is an argument error") {
    std::ostringstream out;
    CHECK_THROWS_AS(emit_metrics({}, "csv", out), std::invalid_argument);
    CHECK_THROWS_AS(emit_metrics({BenchRecord{}}, "yaml", out), std::invalid_argument);
}

TEST_CASE("bench: json emission round-trips the records") {
    auto spec = dm_spec("pagerank", "gas-sync");
    spec.workers = {1, 2};
    spec.repetitions = 2;
    const auto records = run_benchmark(spec);
    std::ostringstream out;
    emit_metrics(records, "json", out);
    std::istringstream in(out.str());
    const auto parsed = records_from_json(in);
    REQUIRE(parsed.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        CHECK(parsed[i] == records[i]);
}

TEST_CASE("bench: byte-identical output across repeated runs") {
    auto spec = dm_spec("community", "gas-async");
    spec.workers = {1, 2, 4};
    auto render = [&] {
        std::ostringstream out;
        emit_metrics(run_benchmark(spec), "csv", out);
        return out.str();
    };
    CHECK(render() == render());
}

TEST_CASE("bench: checksums agree across engines, message counts differ") {
    auto pregel = dm_spec("cc", "pregel");
    auto gas = dm_spec("cc", "gas-sync");
    const auto a = run_benchmark(pregel);
    const auto b = run_benchmark(gas);
    CHECK(a[0].checksum == b[0].checksum);
    CHECK(a[0].metrics.messages_sent != b[0].metrics.messages_sent);
}

TEST_CASE("bench: oracle runs produce comparable checksums") {
    auto spec = dm_spec("cc", "pregel");
    const auto engine_records = run_benchmark(spec);

    OracleSpec oracle;
    oracle.generate = true;
    oracle.generate_vertices = 80;
    oracle.seed = 5;
    oracle.algorithm = "cc";
    const auto record = run_oracle(oracle);
    CHECK(record.checksum == engine_records[0].checksum);

    oracle.algorithm = "pagerank";
    auto pr_spec = dm_spec("pagerank", "pregel");
    CHECK(run_oracle(oracle).checksum == run_benchmark(pr_spec)[0].checksum);
}

TEST_CASE("bench: weak scaling sizes the graph per worker count") {
    BenchmarkSpec spec;
    spec.generate = true;
    spec.edges_per_worker = 1000;
    spec.algorithm = "cc";
    spec.engine = "pregel";
    spec.workers = {1, 2, 4, 8};
    const auto records = run_benchmark(spec);
    REQUIRE(records.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto workers = records[i].workers;
        CHECK(records[i].m == 2 * records[i].n - 3);
        CHECK(records[i].m >= 1000 * workers - 2);
        CHECK(records[i].m <= 1000 * workers + 2);
    }
}

TEST_CASE("bench: counter invariants hold for every algorithm/engine pair") {
    for (const auto &[algorithm, engines] : valid_pairs())
        for (const auto &engine : engines) {
            auto spec = dm_spec(algorithm, engine);
            spec.workers = {3};
            spec.max_rounds = 40;
            spec.samples = 500;
            if (algorithm == "pagerank" && engine == "gas-async") {
                spec.tolerance_mode = true;
                spec.tolerance = 1e-6;
            }
            for (const auto &r : run_benchmark(spec)) {
                CHECK(r.metrics.messages_delivered <= r.metrics.messages_sent);
                CHECK(r.metrics.messages_local + r.metrics.messages_remote ==
                      r.metrics.messages_delivered);
            }
        }
}

TEST_CASE("bench: per-vertex results are exported") {
    auto spec = dm_spec("cc", "pregel");
    std::string results;
    run_benchmark(spec, &results);
    CHECK(results.find("0\t0\n") == 0);
    CHECK(std::count(results.begin(), results.end(), '\n') == 80);
}
