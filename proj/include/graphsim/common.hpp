#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphsim {

using VertexId = std::uint32_t;
using WorkerId = std::uint32_t;

inline constexpr VertexId kNoVertex = std::numeric_limits<VertexId>::max();

/// Input text could not be parsed. Carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string &what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A message or signal was addressed to a vertex that does not exist.
class RoutingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A program broke an engine contract (e.g. wrote a boundary vertex).
class ContractViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Checkpoint file could not be written, read or validated.
class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A size guard was exceeded (oracle input too large, etc).
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dataflow plan failed validation before execution.
class PlanError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// SplitMix64 finalizer. Fixed constants, stable across platforms.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_hash(std::uint64_t value, std::uint64_t seed) {
    return splitmix64(splitmix64(seed) ^ value);
}

/// Deterministic random source. mt19937_64 is fully specified by the
/// standard, and the bounded draw avoids std::uniform_int_distribution,
/// whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Unbiased draw from [0, bound) by rejection.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0)
            throw std::invalid_argument("Rng::next_below: bound must be positive");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % bound;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::vector<T> &items) {
        for (std::size_t i = items.size(); i > 1; --i)
            std::swap(items[i - 1], items[next_below(i)]);
    }

private:
    std::mt19937_64 gen_;
};

} // namespace graphsim
