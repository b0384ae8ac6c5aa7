#pragma once

#include <cstdint>
#include <vector>

namespace graphsim {

/// Counters for one engine run. Message counts follow the simulated
/// cluster's view: messages_sent counts raw send calls (pre-combine),
/// messages_delivered counts envelopes after sender-side combining
/// (i.e. what crossed the simulated wire), split into local and remote by
/// comparing source and destination workers. payload_bytes sums the
/// declared serialized size of delivered envelopes.
struct RunMetrics {
    std::uint64_t supersteps = 0;
    std::uint64_t messages_sent = 0;
    std::uint64_t messages_delivered = 0;
    std::uint64_t messages_local = 0;
    std::uint64_t messages_remote = 0;
    std::uint64_t payload_bytes = 0;
    std::uint64_t vertex_updates = 0; // apply/compute calls that changed state
    std::uint64_t init_updates = 0;   // subset of vertex_updates from init phases
    std::vector<std::uint64_t> active_vertices_per_superstep;
    double wall_time_seconds = 0.0;
    bool max_steps_exhausted = false;
    bool converged = true;
    double final_max_delta = 0.0;       // tolerance-mode engines record the last sweep
    double cache_max_deviation = 0.0;   // verify-cache runs: |cached - fresh| maximum

    void merge_counters(const RunMetrics &other) {
        messages_sent += other.messages_sent;
        messages_delivered += other.messages_delivered;
        messages_local += other.messages_local;
        messages_remote += other.messages_remote;
        payload_bytes += other.payload_bytes;
        vertex_updates += other.vertex_updates;
        init_updates += other.init_updates;
    }
};

} // namespace graphsim
