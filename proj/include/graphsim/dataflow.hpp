#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "common.hpp"
#include "exact_sum.hpp"
#include "metrics.hpp"
#include "parallel.hpp"

namespace graphsim::dataflow {

// Minimal PACT-style dataflow: immutable tuple datasets flow along a DAG of
// second-order operators (map, join, group/aggregate, union, bulk
// iteration). Operators are pure functions of their inputs and run in
// parallel by hash-partitioning on the key fields; parallelism affects only
// metrics, never results.

enum class FieldType { Int, Double, Text };

using Field = std::variant<std::int64_t, double, std::string>;
using Tuple = std::vector<Field>;

struct Schema {
    std::vector<FieldType> fields;

    std::size_t arity() const { return fields.size(); }

    friend bool operator==(const Schema &, const Schema &) = default;
};

inline FieldType field_type_of(const Field &f) {
    switch (f.index()) {
    case 0:
        return FieldType::Int;
    case 1:
        return FieldType::Double;
    default:
        return FieldType::Text;
    }
}

inline std::uint64_t field_hash(const Field &f) {
    switch (f.index()) {
    case 0:
        return splitmix64(static_cast<std::uint64_t>(std::get<std::int64_t>(f)));
    case 1:
        return splitmix64(std::bit_cast<std::uint64_t>(std::get<double>(f)));
    default: {
        std::uint64_t h = 1469598103934665603ULL; // FNV-1a
        for (unsigned char c : std::get<std::string>(f))
            h = (h ^ c) * 1099511628211ULL;
        return splitmix64(h);
    }
    }
}

/// Multiset of fixed-arity tuples with a per-field type.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(Schema schema) : schema_(std::move(schema)) {}

    Dataset(Schema schema, std::vector<Tuple> rows)
        : schema_(std::move(schema)), rows_(std::move(rows)) {
        for (const auto &row : rows_)
            check_row(row);
    }

    const Schema &schema() const { return schema_; }
    const std::vector<Tuple> &rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }

    void append(Tuple row) {
        check_row(row);
        rows_.push_back(std::move(row));
    }

    /// Rows sorted lexicographically; the canonical form used for multiset
    /// comparison and for sink output.
    Dataset sorted() const {
        Dataset out(schema_);
        out.rows_ = rows_;
        std::sort(out.rows_.begin(), out.rows_.end());
        return out;
    }

    static bool multiset_equal(const Dataset &a, const Dataset &b) {
        if (!(a.schema_ == b.schema_) || a.size() != b.size())
            return false;
        auto ra = a.rows_;
        auto rb = b.rows_;
        std::sort(ra.begin(), ra.end());
        std::sort(rb.begin(), rb.end());
        return ra == rb;
    }

    /// Debug CSV, one tuple per line, comma-separated.
    void to_csv(std::ostream &out) const {
        for (const auto &row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i)
                    out << ',';
                if (std::holds_alternative<std::int64_t>(row[i]))
                    out << std::get<std::int64_t>(row[i]);
                else if (std::holds_alternative<double>(row[i])) {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(row[i]));
                    out << buf;
                } else
                    out << std::get<std::string>(row[i]);
            }
            out << '\n';
        }
    }

    static Dataset from_csv(std::istream &in, const Schema &schema) {
        Dataset out(schema);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (line.empty())
                continue;
            std::vector<std::string> tokens;
            std::size_t begin = 0;
            for (;;) {
                const std::size_t end = line.find(',', begin);
                tokens.push_back(line.substr(begin, end - begin));
                if (end == std::string::npos)
                    break;
                begin = end + 1;
            }
            if (tokens.size() != schema.arity())
                throw ParseError(lineno, "expected " + std::to_string(schema.arity()) +
                                             " fields, got " + std::to_string(tokens.size()));
            Tuple row;
            for (std::size_t f = 0; f < schema.arity(); ++f) {
                const std::string &token = tokens[f];
                try {
                    std::size_t used = 0;
                    switch (schema.fields[f]) {
                    case FieldType::Int:
                        row.emplace_back(static_cast<std::int64_t>(std::stoll(token, &used)));
                        if (used != token.size())
                            throw std::invalid_argument("trailing characters");
                        break;
                    case FieldType::Double:
                        row.emplace_back(std::stod(token, &used));
                        if (used != token.size())
                            throw std::invalid_argument("trailing characters");
                        break;
                    case FieldType::Text:
                        row.emplace_back(token);
                        break;
                    }
                } catch (const std::exception &) {
                    throw ParseError(lineno, "cannot parse field '" + token + "'");
                }
            }
            out.append(std::move(row));
        }
        return out;
    }

private:
    void check_row(const Tuple &row) const {
        if (row.size() != schema_.arity())
            throw PlanError("tuple arity " + std::to_string(row.size()) +
                            " does not match schema arity " + std::to_string(schema_.arity()));
        for (std::size_t i = 0; i < row.size(); ++i)
            if (field_type_of(row[i]) != schema_.fields[i])
                throw PlanError("tuple field " + std::to_string(i) + " has wrong type");
    }

    Schema schema_;
    std::vector<Tuple> rows_;
};

class Emitter {
public:
    Emitter(const Schema &schema, std::vector<Tuple> &sink) : schema_(&schema), sink_(&sink) {}

    void operator()(Tuple row) {
        if (row.size() != schema_->arity())
            throw PlanError("emitted tuple has wrong arity");
        for (std::size_t i = 0; i < row.size(); ++i)
            if (field_type_of(row[i]) != schema_->fields[i])
                throw PlanError("emitted tuple field " + std::to_string(i) + " has wrong type");
        sink_->push_back(std::move(row));
    }

private:
    const Schema *schema_;
    std::vector<Tuple> *sink_;
};

struct AggregateSpec {
    enum class Kind { Sum, Count, Min, MostFrequent, Custom };

    Kind kind = Kind::Count;
    std::size_t field = 0;
    Schema custom_schema; // appended after the key fields
    std::function<void(const std::vector<Tuple> &, Emitter &)> custom;

    static AggregateSpec sum(std::size_t field) { return {Kind::Sum, field, {}, nullptr}; }
    static AggregateSpec count() { return {Kind::Count, 0, {}, nullptr}; }
    static AggregateSpec min(std::size_t field) { return {Kind::Min, field, {}, nullptr}; }

    /// Ties are broken toward the minimum value.
    static AggregateSpec most_frequent(std::size_t field) {
        return {Kind::MostFrequent, field, {}, nullptr};
    }

    static AggregateSpec custom_reduce(Schema appended,
                                       std::function<void(const std::vector<Tuple> &, Emitter &)> fn) {
        return {Kind::Custom, 0, std::move(appended), std::move(fn)};
    }
};

using NodeId = std::size_t;

using ConvergenceFn = std::function<bool(const Dataset &prev, const Dataset &next)>;

class Dataflow {
public:
    struct Node {
        enum class Kind { Source, Map, Join, GroupAggregate, Union, LoopInput, BulkIteration, Sink };

        Kind kind;
        Schema schema;
        std::vector<NodeId> inputs;
        std::string source_name;
        std::function<void(const Tuple &, Emitter &)> map_fn;
        std::vector<std::size_t> left_keys, right_keys, group_keys;
        std::function<void(const Tuple &, const Tuple &, Emitter &)> join_fn;
        AggregateSpec aggregate;
        NodeId loop_input = 0;
        NodeId body_root = 0;
        std::uint64_t max_iterations = 0;
        ConvergenceFn converged; // empty = stop when output unchanged
    };

    const std::vector<Node> &nodes() const { return nodes_; }
    const Node &node(NodeId id) const { return nodes_[id]; }

private:
    friend class DataflowBuilder;
    std::vector<Node> nodes_;
};

/// Plans are validated as they are built: key fields must exist and join
/// keys must be type-compatible, so a malformed plan fails before any
/// execution.
class DataflowBuilder {
public:
    NodeId source(std::string name, Schema schema) {
        Dataflow::Node n;
        n.kind = Dataflow::Node::Kind::Source;
        n.schema = std::move(schema);
        n.source_name = std::move(name);
        return add(std::move(n));
    }

    NodeId map(NodeId input, Schema out_schema,
               std::function<void(const Tuple &, Emitter &)> fn) {
        check_node(input);
        Dataflow::Node n;
        n.kind = Dataflow::Node::Kind::Map;
        n.schema = std::move(out_schema);
        n.inputs = {input};
        n.map_fn = std::move(fn);
        return add(std::move(n));
    }

    NodeId join(NodeId left, NodeId right, std::vector<std::size_t> left_keys,
                std::vector<std::size_t> right_keys, Schema out_schema,
                std::function<void(const Tuple &, const Tuple &, Emitter &)> fn) {
        check_node(left);
        check_node(right);
        if (left_keys.size() != right_keys.size() || left_keys.empty())
            throw PlanError("join: key field lists must be non-empty and of equal length");
        for (std::size_t i = 0; i < left_keys.size(); ++i) {
            const Schema &ls = flow_.nodes_[left].schema;
            const Schema &rs = flow_.nodes_[right].schema;
            if (left_keys[i] >= ls.arity() || right_keys[i] >= rs.arity())
                throw PlanError("join: key field out of range");
            if (ls.fields[left_keys[i]] != rs.fields[right_keys[i]])
                throw PlanError("join: key field types differ");
        }
        Dataflow::Node n;
        n.kind = Dataflow::Node::Kind::Join;
        n.schema = std::move(out_schema);
        n.inputs = {left, right};
        n.left_keys = std::move(left_keys);
        n.right_keys = std::move(right_keys);
        n.join_fn = std::move(fn);
        return add(std::move(n));
    }

    NodeId group_aggregate(NodeId input, std::vector<std::size_t> keys, AggregateSpec aggregate) {
        check_node(input);
        const Schema &in = flow_.nodes_[input].schema;
        for (std::size_t k : keys)
            if (k >= in.arity())
                throw PlanError("group_by: key field out of range");
        Schema out;
        for (std::size_t k : keys)
            out.fields.push_back(in.fields[k]);
        switch (aggregate.kind) {
        case AggregateSpec::Kind::Sum:
        case AggregateSpec::Kind::Min:
        case AggregateSpec::Kind::MostFrequent:
            if (aggregate.field >= in.arity())
                throw PlanError("aggregate: field out of range");
            if (aggregate.kind == AggregateSpec::Kind::MostFrequent &&
                in.fields[aggregate.field] != FieldType::Int)
                throw PlanError("most_frequent: only integer fields are supported");
            out.fields.push_back(in.fields[aggregate.field]);
            break;
        case AggregateSpec::Kind::Count:
            out.fields.push_back(FieldType::Int);
            break;
        case AggregateSpec::Kind::Custom:
            for (FieldType t : aggregate.custom_schema.fields)
                out.fields.push_back(t);
            break;
        }
        Dataflow::Node n;
        n.kind = Dataflow::Node::Kind::GroupAggregate;
        n.schema = std::move(out);
        n.inputs = {input};
        n.group_keys = std::move(keys);
        n.aggregate = std::move(aggregate);
        return add(std::move(n));
    }

    NodeId union_of(NodeId a, NodeId b) {
        check_node(a);
        check_node(b);
        if (!(flow_.nodes_[a].schema == flow_.nodes_[b].schema))
            throw PlanError("union: input schemas differ");
        Dataflow::Node n;
        n.kind = Dataflow::Node::Kind::Union;
        n.schema = flow_.nodes_[a].schema;
        n.inputs = {a, b};
        return add(std::move(n));
    }

    /// Name a node's output; execute_dag() materializes every sink.
    NodeId sink(NodeId input, std::string name) {
        check_node(input);
        Dataflow::Node n;
        n.kind = Dataflow::Node::Kind::Sink;
        n.schema = flow_.nodes_[input].schema;
        n.inputs = {input};
        n.source_name = std::move(name);
        return add(std::move(n));
    }

    /// The body is a nested sub-DAG built from the loop input; the body's
    /// output feeds back as the next iteration's input until convergence
    /// (by default: output unchanged as a multiset) or max_iterations.
    NodeId bulk_iteration(NodeId initial, std::uint64_t max_iterations,
                          const std::function<NodeId(DataflowBuilder &, NodeId)> &body,
                          ConvergenceFn converged = nullptr) {
        check_node(initial);
        if (max_iterations == 0)
            throw PlanError("bulk_iteration: max_iterations must be positive");
        Dataflow::Node loop;
        loop.kind = Dataflow::Node::Kind::LoopInput;
        loop.schema = flow_.nodes_[initial].schema;
        const NodeId loop_id = add(std::move(loop));
        const NodeId body_root = body(*this, loop_id);
        check_node(body_root);
        if (!(flow_.nodes_[body_root].schema == flow_.nodes_[loop_id].schema))
            throw PlanError("bulk_iteration: body output schema differs from loop input");
        Dataflow::Node n;
        n.kind = Dataflow::Node::Kind::BulkIteration;
        n.schema = flow_.nodes_[loop_id].schema;
        n.inputs = {initial};
        n.loop_input = loop_id;
        n.body_root = body_root;
        n.max_iterations = max_iterations;
        n.converged = std::move(converged);
        return add(std::move(n));
    }

    Dataflow build() && { return std::move(flow_); }
    const Dataflow &peek() const { return flow_; }

private:
    NodeId add(Dataflow::Node n) {
        flow_.nodes_.push_back(std::move(n));
        return flow_.nodes_.size() - 1;
    }

    void check_node(NodeId id) const {
        if (id >= flow_.nodes_.size())
            throw PlanError("unknown dataflow node");
    }

    Dataflow flow_;
};

struct DataflowResult {
    Dataset output;
    RunMetrics metrics;
};

struct DataflowOutputs {
    std::map<std::string, Dataset> outputs;
    RunMetrics metrics;
};

namespace detail {

inline std::uint64_t key_hash(const Tuple &row, std::span<const std::size_t> keys) {
    std::uint64_t h = 0x2545F4914F6CDD1DULL;
    for (std::size_t k : keys)
        h = splitmix64(h ^ field_hash(row[k]));
    return h;
}

inline bool keys_equal(const Tuple &a, std::span<const std::size_t> ak, const Tuple &b,
                       std::span<const std::size_t> bk) {
    for (std::size_t i = 0; i < ak.size(); ++i)
        if (!(a[ak[i]] == b[bk[i]]))
            return false;
    return true;
}

class Executor {
public:
    Executor(const Dataflow &flow, const std::map<std::string, Dataset> &sources,
             unsigned parallelism, RunMetrics &metrics)
        : flow_(flow), sources_(sources), parallelism_(std::max(1u, parallelism)),
          metrics_(metrics), memo_(flow.nodes().size()) {}

    std::shared_ptr<const Dataset> eval(NodeId id) {
        if (memo_[id])
            return memo_[id];
        const auto &n = flow_.node(id);
        std::shared_ptr<const Dataset> out;
        switch (n.kind) {
        case Dataflow::Node::Kind::Source: {
            const auto it = sources_.find(n.source_name);
            if (it == sources_.end())
                throw PlanError("missing source dataset: " + n.source_name);
            if (!(it->second.schema() == n.schema))
                throw PlanError("source schema mismatch: " + n.source_name);
            out = std::make_shared<Dataset>(it->second);
            break;
        }
        case Dataflow::Node::Kind::Map:
            out = std::make_shared<Dataset>(run_map(n, *eval(n.inputs[0])));
            break;
        case Dataflow::Node::Kind::Join:
            out = std::make_shared<Dataset>(run_join(n, *eval(n.inputs[0]), *eval(n.inputs[1])));
            break;
        case Dataflow::Node::Kind::GroupAggregate:
            out = std::make_shared<Dataset>(run_group(n, *eval(n.inputs[0])));
            break;
        case Dataflow::Node::Kind::Union: {
            Dataset d(n.schema);
            for (NodeId in : n.inputs)
                for (const auto &row : eval(in)->rows())
                    d.append(row);
            out = std::make_shared<Dataset>(std::move(d));
            break;
        }
        case Dataflow::Node::Kind::LoopInput:
            throw PlanError("loop input evaluated outside bulk iteration");
        case Dataflow::Node::Kind::BulkIteration:
            out = std::make_shared<Dataset>(run_bulk(n, *eval(n.inputs[0])));
            break;
        case Dataflow::Node::Kind::Sink:
            out = eval(n.inputs[0]);
            break;
        }
        memo_[id] = out;
        return out;
    }

private:
    Dataset run_map(const Dataflow::Node &n, const Dataset &input) {
        const std::size_t rows = input.rows().size();
        const unsigned p = parallelism_;
        std::vector<std::vector<Tuple>> chunks(p);
        run_workers(p, p > 1, [&](WorkerId w) {
            const std::size_t begin = rows * w / p;
            const std::size_t end = rows * (w + 1) / p;
            Emitter emit(n.schema, chunks[w]);
            for (std::size_t i = begin; i < end; ++i)
                n.map_fn(input.rows()[i], emit);
        });
        Dataset out(n.schema);
        std::vector<Tuple> all;
        for (auto &c : chunks)
            for (auto &row : c)
                all.push_back(std::move(row));
        out = Dataset(n.schema, std::move(all));
        metrics_.messages_sent += rows;
        metrics_.messages_delivered += rows;
        metrics_.messages_local += rows;
        return out;
    }

    // tuples are shuffled to partition hash(key) % p; a tuple leaving its
    // producing chunk counts as a remote message
    void count_shuffle(std::size_t row_index, std::size_t rows, std::uint64_t target,
                       std::size_t arity) {
        ++metrics_.messages_sent;
        ++metrics_.messages_delivered;
        metrics_.payload_bytes += 8 * arity;
        const std::uint64_t producer = parallelism_ > 1 ? row_index * parallelism_ / rows : 0;
        if (producer == target)
            ++metrics_.messages_local;
        else
            ++metrics_.messages_remote;
    }

    Dataset run_join(const Dataflow::Node &n, const Dataset &left, const Dataset &right) {
        const unsigned p = parallelism_;
        std::vector<std::vector<const Tuple *>> left_parts(p), right_parts(p);
        for (std::size_t i = 0; i < left.rows().size(); ++i) {
            const auto &row = left.rows()[i];
            const auto target = key_hash(row, n.left_keys) % p;
            count_shuffle(i, std::max<std::size_t>(left.rows().size(), 1), target, row.size());
            left_parts[target].push_back(&row);
        }
        for (std::size_t i = 0; i < right.rows().size(); ++i) {
            const auto &row = right.rows()[i];
            const auto target = key_hash(row, n.right_keys) % p;
            count_shuffle(i, std::max<std::size_t>(right.rows().size(), 1), target, row.size());
            right_parts[target].push_back(&row);
        }
        std::vector<std::vector<Tuple>> results(p);
        run_workers(p, p > 1, [&](WorkerId w) {
            std::unordered_map<std::uint64_t, std::vector<const Tuple *>> build;
            for (const Tuple *r : right_parts[w])
                build[key_hash(*r, n.right_keys)].push_back(r);
            Emitter emit(n.schema, results[w]);
            for (const Tuple *l : left_parts[w]) {
                const auto it = build.find(key_hash(*l, n.left_keys));
                if (it == build.end())
                    continue;
                for (const Tuple *r : it->second)
                    if (keys_equal(*l, n.left_keys, *r, n.right_keys))
                        n.join_fn(*l, *r, emit);
            }
        });
        std::vector<Tuple> all;
        for (auto &c : results)
            for (auto &row : c)
                all.push_back(std::move(row));
        return Dataset(n.schema, std::move(all));
    }

    Dataset run_group(const Dataflow::Node &n, const Dataset &input) {
        const unsigned p = parallelism_;
        std::vector<std::vector<const Tuple *>> parts(p);
        for (std::size_t i = 0; i < input.rows().size(); ++i) {
            const auto &row = input.rows()[i];
            const auto target = key_hash(row, n.group_keys) % p;
            count_shuffle(i, std::max<std::size_t>(input.rows().size(), 1), target, row.size());
            parts[target].push_back(&row);
        }
        std::vector<std::vector<Tuple>> results(p);
        run_workers(p, p > 1, [&](WorkerId w) {
            // per-key groups in first-appearance order; rows keep input order
            std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
            std::vector<const Tuple *> reps;
            std::vector<std::vector<Tuple>> groups;
            for (const Tuple *row : parts[w]) {
                const auto h = key_hash(*row, n.group_keys);
                auto &bucket = buckets[h];
                std::size_t found = SIZE_MAX;
                for (std::size_t idx : bucket)
                    if (keys_equal(*reps[idx], n.group_keys, *row, n.group_keys)) {
                        found = idx;
                        break;
                    }
                if (found == SIZE_MAX) {
                    found = reps.size();
                    bucket.push_back(found);
                    reps.push_back(row);
                    groups.emplace_back();
                }
                groups[found].push_back(*row);
            }
            Emitter emit(n.schema, results[w]);
            for (std::size_t g = 0; g < groups.size(); ++g)
                fold_group(n, *reps[g], groups[g], emit);
        });
        std::vector<Tuple> all;
        for (auto &c : results)
            for (auto &row : c)
                all.push_back(std::move(row));
        return Dataset(n.schema, std::move(all));
    }

    static void fold_group(const Dataflow::Node &n, const Tuple &rep,
                           const std::vector<Tuple> &rows, Emitter &emit) {
        Tuple out;
        for (std::size_t k : n.group_keys)
            out.push_back(rep[k]);
        switch (n.aggregate.kind) {
        case AggregateSpec::Kind::Count:
            out.emplace_back(static_cast<std::int64_t>(rows.size()));
            break;
        case AggregateSpec::Kind::Sum: {
            const auto f = n.aggregate.field;
            if (std::holds_alternative<double>(rows.front()[f])) {
                ExactSum sum;
                for (const auto &row : rows)
                    sum.add(std::get<double>(row[f]));
                out.emplace_back(sum.value());
            } else {
                std::int64_t sum = 0;
                for (const auto &row : rows)
                    sum += std::get<std::int64_t>(row[f]);
                out.emplace_back(sum);
            }
            break;
        }
        case AggregateSpec::Kind::Min: {
            const auto f = n.aggregate.field;
            Field best = rows.front()[f];
            for (const auto &row : rows)
                if (row[f] < best)
                    best = row[f];
            out.push_back(std::move(best));
            break;
        }
        case AggregateSpec::Kind::MostFrequent: {
            const auto f = n.aggregate.field;
            std::map<std::int64_t, std::uint64_t> counts;
            for (const auto &row : rows)
                ++counts[std::get<std::int64_t>(row[f])];
            std::int64_t best = 0;
            std::uint64_t best_count = 0;
            for (const auto &[value, count] : counts) // ascending: ties keep the minimum
                if (count > best_count) {
                    best = value;
                    best_count = count;
                }
            out.emplace_back(best);
            break;
        }
        case AggregateSpec::Kind::Custom:
            n.aggregate.custom(rows, emit);
            return;
        }
        emit(std::move(out));
    }

    Dataset run_bulk(const Dataflow::Node &n, const Dataset &initial) {
        // nodes depending on the loop input must be re-evaluated per round
        std::vector<bool> variant(flow_.nodes().size(), false);
        variant[n.loop_input] = true;
        for (NodeId id = 0; id < flow_.nodes().size(); ++id)
            for (NodeId in : flow_.node(id).inputs)
                if (variant[in])
                    variant[id] = true;
        for (NodeId id = 0; id < flow_.nodes().size(); ++id) {
            const auto &node = flow_.node(id);
            if (node.kind == Dataflow::Node::Kind::BulkIteration &&
                (variant[node.loop_input] || variant[node.body_root]))
                variant[id] = true;
        }

        auto current = std::make_shared<Dataset>(initial);
        bool converged = false;
        std::uint64_t iterations = 0;
        while (iterations < n.max_iterations) {
            for (NodeId id = 0; id < flow_.nodes().size(); ++id)
                if (variant[id])
                    memo_[id].reset();
            memo_[n.loop_input] = current;
            auto next = eval(n.body_root);
            ++iterations;
            ++metrics_.supersteps;
            const bool done = n.converged ? n.converged(*current, *next)
                                          : Dataset::multiset_equal(*current, *next);
            current = std::make_shared<Dataset>(*next);
            if (done) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            metrics_.max_steps_exhausted = true;
            metrics_.converged = false;
        }
        for (NodeId id = 0; id < flow_.nodes().size(); ++id)
            if (variant[id])
                memo_[id].reset();
        return *current;
    }

    const Dataflow &flow_;
    const std::map<std::string, Dataset> &sources_;
    unsigned parallelism_;
    RunMetrics &metrics_;
    std::vector<std::shared_ptr<const Dataset>> memo_;
};

} // namespace detail

/// Evaluate `root` over the named source datasets. The output is returned
/// in canonical (sorted) row order, so results are reproducible
/// independently of the parallelism degree.
inline DataflowResult execute_dag(const Dataflow &flow, NodeId root,
                                  const std::map<std::string, Dataset> &sources,
                                  unsigned parallelism) {
    const auto start = std::chrono::steady_clock::now();
    DataflowResult result;
    detail::Executor exec(flow, sources, parallelism, result.metrics);
    result.output = exec.eval(root)->sorted();
    result.metrics.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

/// Evaluate every named sink of the plan.
inline DataflowOutputs execute_dag(const Dataflow &flow,
                                   const std::map<std::string, Dataset> &sources,
                                   unsigned parallelism) {
    const auto start = std::chrono::steady_clock::now();
    DataflowOutputs result;
    detail::Executor exec(flow, sources, parallelism, result.metrics);
    bool any = false;
    for (NodeId id = 0; id < flow.nodes().size(); ++id) {
        const auto &node = flow.node(id);
        if (node.kind != Dataflow::Node::Kind::Sink)
            continue;
        any = true;
        result.outputs.emplace(node.source_name, exec.eval(id)->sorted());
    }
    if (!any)
        throw PlanError("execute_dag: the plan has no sink");
    result.metrics.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace graphsim::dataflow
