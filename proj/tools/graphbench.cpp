// graphbench: load or generate a graph, run an algorithm under one of the
// simulated engines across a worker-count matrix, and print metrics records.
// Exit codes: 0 ok, 2 input parse failure, 3 engine contract violation,
// 4 resource guard exceeded.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "graphsim/bench.hpp"

namespace {

std::vector<graphsim::WorkerId> parse_workers(const std::string &csv) {
    std::vector<graphsim::WorkerId> out;
    std::stringstream ss(csv);
    std::string token;
    while (std::getline(ss, token, ','))
        out.push_back(static_cast<graphsim::WorkerId>(std::stoul(token)));
    return out;
}

void write_results(const std::string &path, const std::string &text) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write results file " + path);
    out << text;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"graphbench: multi-model graph processing on a simulated worker cluster"};
    app.require_subcommand(1);

    graphsim::bench::BenchmarkSpec spec;
    std::string workers_csv = "1";
    std::string generator;
    double tolerance_flag = 0.0;

    auto *run = app.add_subcommand("run", "run an algorithm x engine x workers matrix");
    run->add_option("--input", spec.input_path, "edge-list file ('%'/'#' comments, 'u v' lines)");
    run->add_option("--generate", generator, "synthetic generator (dm)");
    run->add_option("--vertices", spec.generate_vertices, "generator size");
    run->add_option("--edges-per-worker", spec.edges_per_worker,
                    "weak scaling: target edges per worker (with --generate dm)");
    run->add_flag("--directed", spec.directed, "treat the input as directed");
    run->add_option("--algorithm", spec.algorithm,
                    "cc | community | pagerank | clustering-exact | clustering-approx")
        ->required();
    run->add_option("--engine", spec.engine,
                    "pregel | gas-sync | gas-async | gas-message | graph-centric | pact")
        ->required();
    run->add_option("--workers", workers_csv, "comma-separated logical worker counts");
    run->add_option("--alpha", spec.alpha, "PageRank dampening factor");
    auto *tol = run->add_option("--tolerance", tolerance_flag,
                                "PageRank tolerance; selects tolerance mode");
    run->add_option("--iterations", spec.iterations, "PageRank fixed iteration count");
    run->add_option("--samples", spec.samples, "clustering-approx sample count");
    run->add_option("--target", spec.target, "clustering-approx target: average-local | global");
    run->add_option("--seed", spec.seed, "seed for generators, partitioning and sampling");
    run->add_option("--repetitions", spec.repetitions, "repetitions per matrix cell");
    run->add_option("--max-rounds", spec.max_rounds,
                    "superstep/iteration guard for non-converging programs");
    run->add_option("--checkpoint-every", spec.checkpoint_every,
                    "checkpoint interval in supersteps (pregel)");
    run->add_option("--checkpoint-dir", spec.checkpoint_dir, "checkpoint directory");
    run->add_option("--kill-at-superstep", spec.kill_at_superstep,
                    "fault injection: lose worker state at this superstep (pregel)");
    run->add_option("--output", spec.output, "csv | json");
    run->add_flag("--parallel", spec.parallel, "run each worker's compute phase on a thread");
    run->add_flag("--timing", spec.timing, "emit measured wall time (off: zeros, reproducible)");
    run->add_option("--results", spec.results_path, "write per-vertex results of the last cell");

    graphsim::bench::OracleSpec oracle;
    std::string oracle_workers_unused;
    std::string oracle_generator;
    std::string oracle_output = "csv";
    std::string oracle_results;
    auto *orc = app.add_subcommand("oracle", "run the brute-force reference implementations");
    orc->add_option("--input", oracle.input_path, "edge-list file");
    orc->add_option("--generate", oracle_generator, "synthetic generator (dm)");
    orc->add_option("--vertices", oracle.generate_vertices, "generator size");
    orc->add_flag("--directed", oracle.directed, "treat the input as directed");
    orc->add_option("--algorithm", oracle.algorithm, "cc | pagerank | clustering")->required();
    orc->add_option("--alpha", oracle.alpha, "PageRank dampening factor");
    orc->add_option("--iterations", oracle.iterations, "PageRank iteration count");
    orc->add_option("--seed", oracle.seed, "generator seed");
    orc->add_option("--output", oracle_output, "csv | json");
    orc->add_option("--results", oracle_results, "write per-vertex results");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (!generator.empty()) {
                if (generator != "dm")
                    throw std::invalid_argument("unknown generator '" + generator +
                                                "' (available: dm)");
                spec.generate = true;
            }
            if (tol->count() > 0) {
                spec.tolerance = tolerance_flag;
                spec.tolerance_mode = true;
            }
            spec.workers = parse_workers(workers_csv);
            std::string results_text;
            const auto records = graphsim::bench::run_benchmark(
                spec, spec.results_path.empty() ? nullptr : &results_text);
            graphsim::bench::emit_metrics(records, spec.output, std::cout);
            if (!spec.results_path.empty())
                write_results(spec.results_path, results_text);
        } else {
            if (!oracle_generator.empty()) {
                if (oracle_generator != "dm")
                    throw std::invalid_argument("unknown generator '" + oracle_generator +
                                                "' (available: dm)");
                oracle.generate = true;
            }
            std::string results_text;
            const auto record = graphsim::bench::run_oracle(
                oracle, oracle_results.empty() ? nullptr : &results_text);
            graphsim::bench::emit_metrics({record}, oracle_output, std::cout);
            if (!oracle_results.empty())
                write_results(oracle_results, results_text);
        }
    } catch (const graphsim::ParseError &e) {
        std::cerr << "input parse failure: " << e.what() << "\n";
        return 2;
    } catch (const graphsim::RoutingError &e) {
        std::cerr << "engine contract violation: " << e.what() << "\n";
        return 3;
    } catch (const graphsim::ContractViolation &e) {
        std::cerr << "engine contract violation: " << e.what() << "\n";
        return 3;
    } catch (const graphsim::PlanError &e) {
        std::cerr << "engine contract violation: " << e.what() << "\n";
        return 3;
    } catch (const graphsim::ResourceError &e) {
        std::cerr << "resource guard exceeded: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument &e) {
        std::cerr << "invalid arguments: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
