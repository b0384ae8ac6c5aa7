#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "metrics.hpp"
#include "partition.hpp"

namespace graphsim {

/// A typed payload addressed to a destination vertex, staged for the next
/// superstep barrier. seq is strictly increasing per (src_worker, superstep).
template <typename Payload>
struct MessageEnvelope {
    VertexId dst;
    Payload payload;
    WorkerId src_worker;
    std::uint64_t seq;
};

/// Worker-private staging buffer; handed to exchange() at the barrier.
template <typename Payload>
class Outbox {
public:
    explicit Outbox(WorkerId worker = 0) : worker_(worker) {}

    void send(VertexId dst, Payload payload) {
        envelopes_.push_back({dst, std::move(payload), worker_, next_seq_++});
    }

    WorkerId worker() const { return worker_; }
    std::size_t size() const { return envelopes_.size(); }
    std::vector<MessageEnvelope<Payload>> &envelopes() { return envelopes_; }
    const std::vector<MessageEnvelope<Payload>> &envelopes() const { return envelopes_; }

    void reset(WorkerId worker) {
        worker_ = worker;
        next_seq_ = 0;
        envelopes_.clear();
    }

private:
    WorkerId worker_ = 0;
    std::uint64_t next_seq_ = 0;
    std::vector<MessageEnvelope<Payload>> envelopes_;
};

template <typename Payload>
using CombinerFn = std::function<Payload(const Payload &, const Payload &)>;

template <typename Payload>
using PayloadSizeFn = std::function<std::uint64_t(const Payload &)>;

/// Move all staged envelopes to their destination inboxes.
///
/// With a combiner, each (src_worker, dst) group collapses to one envelope
/// before transmission and the remote arrivals of each destination collapse
/// once more on the receiving side. Delivery order within a vertex is the
/// deterministic (src_worker, seq) sort. Counters are updated on `metrics`;
/// an out-of-range destination raises RoutingError naming the envelope.
template <typename Payload>
void exchange(std::vector<Outbox<Payload>> &outboxes, const PartitionAssignment &assignment,
              const std::optional<CombinerFn<Payload>> &combiner,
              std::vector<std::vector<Payload>> &inboxes, RunMetrics &metrics,
              const PayloadSizeFn<Payload> &payload_size) {
    const auto n = static_cast<VertexId>(inboxes.size());
    std::vector<MessageEnvelope<Payload>> transmitted;
    for (auto &outbox : outboxes) {
        metrics.messages_sent += outbox.size();
        for (auto &env : outbox.envelopes())
            if (env.dst >= n)
                throw RoutingError("message to nonexistent vertex " + std::to_string(env.dst) +
                                   " from worker " + std::to_string(env.src_worker) + " (seq " +
                                   std::to_string(env.seq) + ")");
        if (combiner && !outbox.envelopes().empty()) {
            // Sender-side combining: fold per destination in seq order,
            // keeping the first envelope of each group.
            std::vector<MessageEnvelope<Payload>> combined;
            std::vector<std::int64_t> slot(n, -1);
            for (auto &env : outbox.envelopes()) {
                if (slot[env.dst] < 0) {
                    slot[env.dst] = static_cast<std::int64_t>(combined.size());
                    combined.push_back(std::move(env));
                } else {
                    auto &acc = combined[static_cast<std::size_t>(slot[env.dst])];
                    acc.payload = (*combiner)(acc.payload, env.payload);
                }
            }
            for (auto &env : combined)
                transmitted.push_back(std::move(env));
        } else {
            for (auto &env : outbox.envelopes())
                transmitted.push_back(std::move(env));
        }
        outbox.reset(outbox.worker());
    }

    for (const auto &env : transmitted) {
        ++metrics.messages_delivered;
        if (assignment.owner_of(env.dst) == env.src_worker)
            ++metrics.messages_local;
        else
            ++metrics.messages_remote;
        metrics.payload_bytes += payload_size(env.payload);
    }

    // Group per destination, deterministic order.
    std::stable_sort(transmitted.begin(), transmitted.end(), [](const auto &a, const auto &b) {
        if (a.dst != b.dst)
            return a.dst < b.dst;
        if (a.src_worker != b.src_worker)
            return a.src_worker < b.src_worker;
        return a.seq < b.seq;
    });

    std::size_t i = 0;
    while (i < transmitted.size()) {
        std::size_t j = i;
        const VertexId dst = transmitted[i].dst;
        while (j < transmitted.size() && transmitted[j].dst == dst)
            ++j;
        if (combiner) {
            // Receiver-side: collapse the remote arrivals once more.
            const WorkerId home = assignment.owner_of(dst);
            std::optional<Payload> local;
            std::optional<Payload> remote;
            bool local_first = false;
            bool seen_any = false;
            for (std::size_t t = i; t < j; ++t) {
                auto &env = transmitted[t];
                if (env.src_worker == home) {
                    local = std::move(env.payload);
                    local_first = !seen_any;
                } else if (remote) {
                    *remote = (*combiner)(*remote, env.payload);
                } else {
                    remote = std::move(env.payload);
                }
                seen_any = true;
            }
            if (local && local_first) {
                inboxes[dst].push_back(std::move(*local));
                if (remote)
                    inboxes[dst].push_back(std::move(*remote));
            } else {
                if (remote)
                    inboxes[dst].push_back(std::move(*remote));
                if (local)
                    inboxes[dst].push_back(std::move(*local));
            }
        } else {
            for (std::size_t t = i; t < j; ++t)
                inboxes[dst].push_back(std::move(transmitted[t].payload));
        }
        i = j;
    }
}

template <typename Payload>
std::uint64_t default_payload_size(const Payload &) {
    return sizeof(Payload);
}

} // namespace graphsim
