#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "algorithms/clustering.hpp"
#include "algorithms/community.hpp"
#include "algorithms/components.hpp"
#include "algorithms/oracles.hpp"
#include "algorithms/pagerank.hpp"
#include "common.hpp"
#include "graph.hpp"
#include "metrics.hpp"

// Benchmark driver behind the CLI: validates a spec, runs the requested
// algorithm x engine x worker-count matrix over a loaded or generated
// graph, and emits one record per cell as CSV or JSON. "Workers" are
// simulated logical partitions within one process, not machines.

namespace graphsim::bench {

struct BenchmarkSpec {
    // input: either a file or the generator
    std::string input_path;
    bool generate = false;               // Dorogovtsev-Mendes
    VertexId generate_vertices = 0;      // --vertices
    std::uint64_t edges_per_worker = 0;  // weak scaling: m ~ workers * edges_per_worker
    bool directed = false;

    std::string algorithm; // cc | community | pagerank | clustering-exact | clustering-approx
    std::string engine;    // pregel | gas-sync | gas-async | gas-message | graph-centric | pact
    std::vector<WorkerId> workers = {1};

    double alpha = 0.15;
    double tolerance = 1e-8;
    bool tolerance_mode = false; // set when --tolerance is given; else fixed iterations
    std::uint64_t iterations = 30;
    std::uint64_t samples = 100000;
    std::string target = "average-local"; // clustering-approx: average-local | global
    std::uint64_t seed = 0;
    unsigned repetitions = 1;
    std::uint64_t max_rounds = 10000; // superstep/iteration guard

    std::uint64_t checkpoint_every = 0;
    std::int64_t kill_at_superstep = -1;
    std::string checkpoint_dir;

    std::string output = "csv"; // csv | json
    bool parallel = false;
    bool timing = false; // default off keeps output byte-reproducible
    std::string results_path;
};

struct BenchRecord {
    std::string engine;
    std::string algorithm;
    WorkerId workers = 1;
    unsigned repetition = 0;
    std::uint64_t n = 0;
    std::uint64_t m = 0;
    RunMetrics metrics;
    std::uint64_t checksum = 0;

    friend bool operator==(const BenchRecord &a, const BenchRecord &b) {
        return a.engine == b.engine && a.algorithm == b.algorithm && a.workers == b.workers &&
               a.repetition == b.repetition && a.n == b.n && a.m == b.m &&
               a.checksum == b.checksum &&
               a.metrics.supersteps == b.metrics.supersteps &&
               a.metrics.messages_sent == b.metrics.messages_sent &&
               a.metrics.messages_delivered == b.metrics.messages_delivered &&
               a.metrics.messages_local == b.metrics.messages_local &&
               a.metrics.messages_remote == b.metrics.messages_remote &&
               a.metrics.payload_bytes == b.metrics.payload_bytes &&
               a.metrics.vertex_updates == b.metrics.vertex_updates &&
               a.metrics.init_updates == b.metrics.init_updates &&
               a.metrics.active_vertices_per_superstep ==
                   b.metrics.active_vertices_per_superstep &&
               a.metrics.converged == b.metrics.converged &&
               a.metrics.max_steps_exhausted == b.metrics.max_steps_exhausted &&
               a.metrics.final_max_delta == b.metrics.final_max_delta &&
               a.metrics.wall_time_seconds == b.metrics.wall_time_seconds;
    }
};

inline const std::map<std::string, std::vector<std::string>> &valid_pairs() {
    static const std::map<std::string, std::vector<std::string>> pairs = {
        {"cc", {"pregel", "gas-sync", "gas-async", "gas-message", "graph-centric", "pact"}},
        {"community", {"pregel", "gas-sync", "gas-async", "graph-centric", "pact"}},
        {"pagerank", {"pregel", "gas-sync", "gas-async", "graph-centric", "pact"}},
        {"clustering-exact", {"pregel", "gas-sync", "graph-centric", "pact"}},
        {"clustering-approx", {"pregel", "gas-message"}},
    };
    return pairs;
}

inline std::string valid_pairs_message() {
    std::ostringstream out;
    out << "valid algorithm/engine pairs:";
    for (const auto &[alg, engines] : valid_pairs()) {
        out << "\n  " << alg << ":";
        for (const auto &e : engines)
            out << ' ' << e;
    }
    return out.str();
}

inline void validate(const BenchmarkSpec &spec) {
    const auto &pairs = valid_pairs();
    const auto alg = pairs.find(spec.algorithm);
    if (alg == pairs.end())
        throw std::invalid_argument("unknown algorithm '" + spec.algorithm + "'\n" +
                                    valid_pairs_message());
    if (std::find(alg->second.begin(), alg->second.end(), spec.engine) == alg->second.end())
        throw std::invalid_argument("engine '" + spec.engine + "' does not run algorithm '" +
                                    spec.algorithm + "'\n" + valid_pairs_message());
    if (spec.input_path.empty() == !spec.generate)
        throw std::invalid_argument("exactly one of --input and --generate is required");
    if (spec.generate && spec.generate_vertices < 3 && spec.edges_per_worker == 0)
        throw std::invalid_argument("--generate dm needs --vertices N (N >= 3) or "
                                    "--edges-per-worker N");
    if (spec.workers.empty())
        throw std::invalid_argument("--workers list must not be empty");
    for (WorkerId w : spec.workers)
        if (w == 0)
            throw std::invalid_argument("worker counts must be positive");
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0))
        throw std::invalid_argument("--alpha must be in (0,1)");
    if (spec.iterations == 0)
        throw std::invalid_argument("--iterations must be positive");
    if (spec.samples == 0)
        throw std::invalid_argument("--samples must be positive");
    if (spec.repetitions == 0)
        throw std::invalid_argument("--repetitions must be positive");
    if (spec.target != "average-local" && spec.target != "global")
        throw std::invalid_argument("--target must be average-local or global");
    if (spec.output != "csv" && spec.output != "json")
        throw std::invalid_argument("--output must be csv or json");
    if (spec.algorithm == "pagerank" && spec.engine == "gas-async" && !spec.tolerance_mode)
        throw std::invalid_argument(
            "pagerank on gas-async runs in tolerance mode; pass --tolerance EPS");
    if (spec.checkpoint_every > 0 && spec.engine != "pregel")
        throw std::invalid_argument("--checkpoint-every is supported by the pregel engine only");
    if (spec.kill_at_superstep >= 0 && spec.engine != "pregel")
        throw std::invalid_argument("--kill-at-superstep is supported by the pregel engine only");
    if (spec.edges_per_worker > 0 && !spec.generate)
        throw std::invalid_argument("--edges-per-worker requires --generate dm");
}

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CellOutput {
    RunMetrics metrics;
    std::uint64_t checksum = 0;
    std::string results_text; // per-vertex values plus scalar summary lines
};

inline CellOutput run_cell(const Graph &graph, const BenchmarkSpec &spec, WorkerId workers) {
    using namespace graphsim::algo;
    Engine engine{};
    if (!parse_engine(spec.engine, engine))
        throw std::invalid_argument("unknown engine: " + spec.engine);

    CellOutput out;
    std::ostringstream results;
    if (spec.algorithm == "cc") {
        CcOptions opts;
        opts.workers = workers;
        opts.seed = spec.seed;
        opts.parallel = spec.parallel;
        opts.max_rounds = spec.max_rounds;
        opts.checkpoint_interval = spec.checkpoint_every;
        opts.kill_at_superstep = spec.kill_at_superstep;
        if (spec.checkpoint_every > 0)
            opts.checkpoint_dir = spec.checkpoint_dir.empty()
                                      ? std::filesystem::temp_directory_path()
                                      : std::filesystem::path(spec.checkpoint_dir);
        auto r = connected_components(graph, engine, opts);
        out.metrics = r.metrics;
        out.checksum = result_checksum(std::span<const VertexId>(r.labels));
        write_vertex_values<VertexId>(results, r.labels);
    } else if (spec.algorithm == "community") {
        CommunityOptions opts;
        opts.workers = workers;
        opts.seed = spec.seed;
        opts.parallel = spec.parallel;
        opts.max_rounds = spec.max_rounds;
        auto r = community_detection_lp(graph, engine, opts);
        out.metrics = r.metrics;
        out.metrics.converged = r.converged;
        out.checksum = result_checksum(std::span<const VertexId>(r.labels));
        write_vertex_values<VertexId>(results, r.labels);
        write_scalar(results, "converged", r.converged ? "1" : "0");
    } else if (spec.algorithm == "pagerank") {
        PrOptions opts;
        opts.workers = workers;
        opts.seed = spec.seed;
        opts.parallel = spec.parallel;
        opts.max_rounds = spec.max_rounds;
        opts.alpha = spec.alpha;
        opts.iterations = spec.iterations;
        opts.tolerance = spec.tolerance;
        opts.mode = spec.tolerance_mode ? PrMode::Tolerance : PrMode::Fixed;
        auto r = pagerank(graph, engine, opts);
        out.metrics = r.metrics;
        out.metrics.final_max_delta = r.final_max_delta;
        out.checksum = result_checksum(std::span<const double>(r.scores));
        write_vertex_values<double>(results, r.scores);
    } else if (spec.algorithm == "clustering-exact") {
        ClusteringOptions opts;
        opts.workers = workers;
        opts.seed = spec.seed;
        opts.parallel = spec.parallel;
        auto r = clustering_exact(graph, engine, opts);
        out.metrics = r.metrics;
        out.checksum = result_checksum(std::span<const double>(r.local));
        write_vertex_values<double>(results, r.local);
        write_scalar(results, "average_local", format_double(r.average_local));
        write_scalar(results, "global", format_double(r.global_cc));
        write_scalar(results, "triangles", std::to_string(r.triangles));
        write_scalar(results, "triplets", std::to_string(r.triplets));
    } else if (spec.algorithm == "clustering-approx") {
        ApproxOptions opts;
        opts.workers = workers;
        opts.seed = spec.seed;
        opts.parallel = spec.parallel;
        opts.samples = spec.samples;
        opts.target = spec.target == "global" ? ApproxTarget::Global : ApproxTarget::AverageLocal;
        auto r = clustering_approx(graph, engine, opts);
        out.metrics = r.metrics;
        const std::vector<double> estimate = {r.estimate};
        out.checksum = result_checksum(std::span<const double>(estimate));
        write_scalar(results, "estimate", format_double(r.estimate));
        write_scalar(results, "samples", std::to_string(r.samples));
        write_scalar(results, "hits", std::to_string(r.hits));
    } else {
        throw std::invalid_argument("unknown algorithm: " + spec.algorithm);
    }
    out.results_text = results.str();
    return out;
}

inline Graph load_spec_graph(const BenchmarkSpec &spec, WorkerId workers) {
    if (spec.generate) {
        VertexId n = spec.generate_vertices;
        if (spec.edges_per_worker > 0) {
            // weak scaling: m = 2n-3 edges, so n grows with the worker count
            const std::uint64_t target_edges = spec.edges_per_worker * workers;
            n = static_cast<VertexId>((target_edges + 3) / 2);
            if (n < 3)
                n = 3;
        }
        return generate_dorogovtsev_mendes(n, spec.seed);
    }
    std::ifstream in(spec.input_path);
    if (!in)
        throw ParseError(0, "cannot open input file " + spec.input_path);
    return load_edge_list(in, spec.directed);
}

} // namespace detail

inline std::vector<BenchRecord> run_benchmark(const BenchmarkSpec &spec,
                                              std::string *last_results = nullptr) {
    validate(spec);
    std::vector<BenchRecord> records;
    std::optional<Graph> shared;
    if (spec.edges_per_worker == 0)
        shared = detail::load_spec_graph(spec, 1);
    for (WorkerId workers : spec.workers) {
        if (spec.edges_per_worker > 0)
            shared = detail::load_spec_graph(spec, workers);
        const Graph &graph = *shared;
        for (unsigned rep = 0; rep < spec.repetitions; ++rep) {
            auto cell = detail::run_cell(graph, spec, workers);
            BenchRecord record;
            record.engine = spec.engine;
            record.algorithm = spec.algorithm;
            record.workers = workers;
            record.repetition = rep;
            record.n = graph.num_vertices();
            record.m = graph.num_edges();
            record.metrics = cell.metrics;
            if (!spec.timing)
                record.metrics.wall_time_seconds = 0.0;
            record.checksum = cell.checksum;
            records.push_back(std::move(record));
            if (last_results)
                *last_results = std::move(cell.results_text);
        }
    }
    return records;
}

// ---- emission ----------------------------------------------------------

inline constexpr const char *kCsvHeader =
    "engine,algorithm,workers,repetition,n,m,supersteps,messages_sent,messages_delivered,"
    "messages_local,messages_remote,payload_bytes,vertex_updates,init_updates,active_vertices,"
    "converged,max_steps_exhausted,final_max_delta,wall_time_seconds,checksum";

inline void emit_metrics(const std::vector<BenchRecord> &records, const std::string &format,
                         std::ostream &out) {
    if (records.empty())
        throw std::invalid_argument("emit_metrics: no records");
    if (format == "csv") {
        out << kCsvHeader << '\n';
        for (const auto &r : records) {
            std::string actives;
            for (std::size_t i = 0; i < r.metrics.active_vertices_per_superstep.size(); ++i) {
                if (i)
                    actives += ';';
                actives += std::to_string(r.metrics.active_vertices_per_superstep[i]);
            }
            char checksum[24];
            std::snprintf(checksum, sizeof(checksum), "%016llx",
                          static_cast<unsigned long long>(r.checksum));
            out << r.engine << ',' << r.algorithm << ',' << r.workers << ',' << r.repetition
                << ',' << r.n << ',' << r.m << ',' << r.metrics.supersteps << ','
                << r.metrics.messages_sent << ',' << r.metrics.messages_delivered << ','
                << r.metrics.messages_local << ',' << r.metrics.messages_remote << ','
                << r.metrics.payload_bytes << ',' << r.metrics.vertex_updates << ','
                << r.metrics.init_updates << ',' << actives << ','
                << (r.metrics.converged ? 1 : 0) << ',' << (r.metrics.max_steps_exhausted ? 1 : 0)
                << ',' << detail::format_double(r.metrics.final_max_delta) << ','
                << detail::format_double(r.metrics.wall_time_seconds) << ',' << checksum << '\n';
        }
        return;
    }
    if (format == "json") {
        nlohmann::ordered_json array = nlohmann::ordered_json::array();
        for (const auto &r : records) {
            nlohmann::ordered_json obj;
            obj["engine"] = r.engine;
            obj["algorithm"] = r.algorithm;
            obj["workers"] = r.workers;
            obj["repetition"] = r.repetition;
            obj["n"] = r.n;
            obj["m"] = r.m;
            obj["supersteps"] = r.metrics.supersteps;
            obj["messages_sent"] = r.metrics.messages_sent;
            obj["messages_delivered"] = r.metrics.messages_delivered;
            obj["messages_local"] = r.metrics.messages_local;
            obj["messages_remote"] = r.metrics.messages_remote;
            obj["payload_bytes"] = r.metrics.payload_bytes;
            obj["vertex_updates"] = r.metrics.vertex_updates;
            obj["init_updates"] = r.metrics.init_updates;
            obj["active_vertices"] = r.metrics.active_vertices_per_superstep;
            obj["converged"] = r.metrics.converged;
            obj["max_steps_exhausted"] = r.metrics.max_steps_exhausted;
            obj["final_max_delta"] = r.metrics.final_max_delta;
            obj["wall_time_seconds"] = r.metrics.wall_time_seconds;
            char checksum[24];
            std::snprintf(checksum, sizeof(checksum), "%016llx",
                          static_cast<unsigned long long>(r.checksum));
            obj["checksum"] = checksum;
            array.push_back(std::move(obj));
        }
        out << array.dump(2) << '\n';
        return;
    }
    throw std::invalid_argument("emit_metrics: unknown format '" + format + "'");
}

inline std::vector<BenchRecord> records_from_json(std::istream &in) {
    const auto array = nlohmann::json::parse(in);
    std::vector<BenchRecord> records;
    for (const auto &obj : array) {
        BenchRecord r;
        r.engine = obj.at("engine").get<std::string>();
        r.algorithm = obj.at("algorithm").get<std::string>();
        r.workers = obj.at("workers").get<WorkerId>();
        r.repetition = obj.at("repetition").get<unsigned>();
        r.n = obj.at("n").get<std::uint64_t>();
        r.m = obj.at("m").get<std::uint64_t>();
        r.metrics.supersteps = obj.at("supersteps").get<std::uint64_t>();
        r.metrics.messages_sent = obj.at("messages_sent").get<std::uint64_t>();
        r.metrics.messages_delivered = obj.at("messages_delivered").get<std::uint64_t>();
        r.metrics.messages_local = obj.at("messages_local").get<std::uint64_t>();
        r.metrics.messages_remote = obj.at("messages_remote").get<std::uint64_t>();
        r.metrics.payload_bytes = obj.at("payload_bytes").get<std::uint64_t>();
        r.metrics.vertex_updates = obj.at("vertex_updates").get<std::uint64_t>();
        r.metrics.init_updates = obj.at("init_updates").get<std::uint64_t>();
        r.metrics.active_vertices_per_superstep =
            obj.at("active_vertices").get<std::vector<std::uint64_t>>();
        r.metrics.converged = obj.at("converged").get<bool>();
        r.metrics.max_steps_exhausted = obj.at("max_steps_exhausted").get<bool>();
        r.metrics.final_max_delta = obj.at("final_max_delta").get<double>();
        r.metrics.wall_time_seconds = obj.at("wall_time_seconds").get<double>();
        r.checksum = std::stoull(obj.at("checksum").get<std::string>(), nullptr, 16);
        records.push_back(std::move(r));
    }
    return records;
}

// ---- oracle runs -------------------------------------------------------

struct OracleSpec {
    std::string input_path;
    bool generate = false;
    VertexId generate_vertices = 0;
    bool directed = false;
    std::string algorithm; // cc | pagerank | clustering
    double alpha = 0.15;
    std::uint64_t iterations = 30;
    std::uint64_t seed = 0;
};

inline BenchRecord run_oracle(const OracleSpec &spec, std::string *results_text = nullptr) {
    using namespace graphsim::algo;
    Graph graph = [&] {
        if (spec.generate)
            return generate_dorogovtsev_mendes(spec.generate_vertices, spec.seed);
        std::ifstream in(spec.input_path);
        if (!in)
            throw ParseError(0, "cannot open input file " + spec.input_path);
        return load_edge_list(in, spec.directed);
    }();

    BenchRecord record;
    record.engine = "oracle";
    record.algorithm = spec.algorithm;
    record.n = graph.num_vertices();
    record.m = graph.num_edges();
    std::ostringstream results;
    if (spec.algorithm == "cc") {
        const auto labels = oracle_components(graph);
        record.checksum = result_checksum(std::span<const VertexId>(labels));
        write_vertex_values<VertexId>(results, labels);
    } else if (spec.algorithm == "pagerank") {
        const auto scores = oracle_pagerank(graph, spec.alpha, spec.iterations);
        record.checksum = result_checksum(std::span<const double>(scores));
        write_vertex_values<double>(results, scores);
    } else if (spec.algorithm == "clustering") {
        const auto tri = oracle_triangles(graph);
        ClusteringResult folded;
        algo::detail::finalize_clustering(graph, tri.delta, folded);
        record.checksum = result_checksum(std::span<const double>(folded.local));
        write_vertex_values<double>(results, folded.local);
        write_scalar(results, "average_local", detail::format_double(folded.average_local));
        write_scalar(results, "global", detail::format_double(folded.global_cc));
        write_scalar(results, "triangles", std::to_string(tri.triangles));
        write_scalar(results, "triplets", std::to_string(tri.triplets));
    } else {
        throw std::invalid_argument("oracle: algorithm must be cc, pagerank or clustering");
    }
    if (results_text)
        *results_text = results.str();
    return record;
}

} // namespace graphsim::bench
