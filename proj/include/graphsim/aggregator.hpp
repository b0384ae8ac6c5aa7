#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "common.hpp"
#include "exact_sum.hpp"

namespace graphsim {

using AggValue = std::variant<bool, std::int64_t, double>;

enum class AggKind { BoolAnd, BoolOr, IntSum, IntMin, IntMax, DoubleSum, DoubleMin, DoubleMax };

/// Global reductions committed at the superstep barrier; the committed
/// value becomes readable in the *next* superstep. Non-sticky aggregators
/// reset to their identity before each superstep's accumulation; sticky
/// ones keep accumulating across supersteps. Double sums are held exactly,
/// so the committed value is independent of contribution order and of how
/// contributions are split across workers.
class AggregatorBoard {
public:
    void register_aggregator(const std::string &name, AggKind kind, AggValue initial,
                             bool sticky = false) {
        if (index_.count(name))
            throw std::invalid_argument("aggregator already registered: " + name);
        index_[name] = entries_.size();
        Entry e;
        e.name = name;
        e.kind = kind;
        e.sticky = sticky;
        e.committed = initial;
        if (kind == AggKind::DoubleSum)
            e.committed_sum = ExactSum(std::get<double>(initial));
        entries_.push_back(std::move(e));
    }

    bool has(const std::string &name) const { return index_.count(name) != 0; }

    std::size_t index_of(const std::string &name) const {
        const auto it = index_.find(name);
        if (it == index_.end())
            throw std::invalid_argument("unregistered aggregator: " + name);
        return it->second;
    }

    /// Worker-local accumulation state, merged at the barrier.
    struct Partials {
        struct Slot {
            bool engaged = false;
            bool b = false;
            std::int64_t i = 0;
            double d = 0.0;
            ExactSum sum;
        };
        std::vector<Slot> slots;
    };

    Partials make_partials() const { return Partials{std::vector<Partials::Slot>(entries_.size())}; }

    void contribute(Partials &partials, std::size_t idx, const AggValue &value) const {
        const Entry &e = entries_[idx];
        auto &slot = partials.slots[idx];
        switch (e.kind) {
        case AggKind::BoolAnd:
            slot.b = slot.engaged ? (slot.b && std::get<bool>(value)) : std::get<bool>(value);
            break;
        case AggKind::BoolOr:
            slot.b = slot.engaged ? (slot.b || std::get<bool>(value)) : std::get<bool>(value);
            break;
        case AggKind::IntSum:
            slot.i += std::get<std::int64_t>(value);
            break;
        case AggKind::IntMin:
            slot.i = slot.engaged ? std::min(slot.i, std::get<std::int64_t>(value))
                                  : std::get<std::int64_t>(value);
            break;
        case AggKind::IntMax:
            slot.i = slot.engaged ? std::max(slot.i, std::get<std::int64_t>(value))
                                  : std::get<std::int64_t>(value);
            break;
        case AggKind::DoubleSum:
            slot.sum.add(std::get<double>(value));
            break;
        case AggKind::DoubleMin:
            slot.d = slot.engaged ? std::min(slot.d, std::get<double>(value))
                                  : std::get<double>(value);
            break;
        case AggKind::DoubleMax:
            slot.d = slot.engaged ? std::max(slot.d, std::get<double>(value))
                                  : std::get<double>(value);
            break;
        }
        slot.engaged = true;
    }

    void contribute(Partials &partials, const std::string &name, const AggValue &value) const {
        contribute(partials, index_of(name), value);
    }

    /// Fold worker partials into the committed values.
    void commit(std::span<Partials> worker_partials) {
        for (std::size_t idx = 0; idx < entries_.size(); ++idx) {
            Entry &e = entries_[idx];
            bool b = false;
            std::int64_t i = 0;
            double d = 0.0;
            ExactSum sum;
            bool engaged = false;
            if (e.sticky) {
                // continue from the committed state
                engaged = true;
                switch (e.kind) {
                case AggKind::BoolAnd:
                case AggKind::BoolOr:
                    b = std::get<bool>(e.committed);
                    break;
                case AggKind::IntSum:
                case AggKind::IntMin:
                case AggKind::IntMax:
                    i = std::get<std::int64_t>(e.committed);
                    break;
                case AggKind::DoubleSum:
                    sum = e.committed_sum;
                    break;
                case AggKind::DoubleMin:
                case AggKind::DoubleMax:
                    d = std::get<double>(e.committed);
                    break;
                }
            } else {
                b = identity_bool(e.kind);
                i = identity_int(e.kind);
                d = 0.0;
            }
            for (const auto &partials : worker_partials) {
                const auto &slot = partials.slots[idx];
                if (!slot.engaged)
                    continue;
                switch (e.kind) {
                case AggKind::BoolAnd:
                    b = engaged ? (b && slot.b) : slot.b;
                    break;
                case AggKind::BoolOr:
                    b = engaged ? (b || slot.b) : slot.b;
                    break;
                case AggKind::IntSum:
                    i = engaged ? i + slot.i : slot.i;
                    break;
                case AggKind::IntMin:
                    i = engaged ? std::min(i, slot.i) : slot.i;
                    break;
                case AggKind::IntMax:
                    i = engaged ? std::max(i, slot.i) : slot.i;
                    break;
                case AggKind::DoubleSum:
                    sum.merge(slot.sum);
                    break;
                case AggKind::DoubleMin:
                    d = engaged ? std::min(d, slot.d) : slot.d;
                    break;
                case AggKind::DoubleMax:
                    d = engaged ? std::max(d, slot.d) : slot.d;
                    break;
                }
                engaged = true;
            }
            switch (e.kind) {
            case AggKind::BoolAnd:
            case AggKind::BoolOr:
                e.committed = engaged ? b : identity_bool(e.kind);
                break;
            case AggKind::IntSum:
            case AggKind::IntMin:
            case AggKind::IntMax:
                e.committed = engaged ? i : identity_int(e.kind);
                break;
            case AggKind::DoubleSum:
                e.committed_sum = sum;
                e.committed = sum.value();
                break;
            case AggKind::DoubleMin:
            case AggKind::DoubleMax:
                e.committed = engaged ? d : 0.0;
                break;
            }
        }
    }

    const AggValue &value(const std::string &name) const { return entries_[index_of(name)].committed; }

    void set_value(const std::string &name, AggValue v) {
        Entry &e = entries_[index_of(name)];
        e.committed = v;
        if (e.kind == AggKind::DoubleSum)
            e.committed_sum = ExactSum(std::get<double>(v));
    }

    std::map<std::string, AggValue> snapshot() const {
        std::map<std::string, AggValue> out;
        for (const auto &e : entries_)
            out[e.name] = e.committed;
        return out;
    }

    void restore_snapshot(const std::map<std::string, AggValue> &values) {
        for (const auto &[name, v] : values)
            set_value(name, v);
    }

private:
    struct Entry {
        std::string name;
        AggKind kind;
        bool sticky;
        AggValue committed;
        ExactSum committed_sum;
    };

    static bool identity_bool(AggKind kind) { return kind == AggKind::BoolAnd; }

    static std::int64_t identity_int(AggKind kind) {
        switch (kind) {
        case AggKind::IntMin:
            return std::numeric_limits<std::int64_t>::max();
        case AggKind::IntMax:
            return std::numeric_limits<std::int64_t>::min();
        default:
            return 0;
        }
    }

    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

} // namespace graphsim
