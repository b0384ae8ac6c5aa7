#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace graphsim {

/// Exact accumulator for IEEE double summands.
///
/// The running sum is held in a wide fixed-point register (36 x 64-bit
/// windows spanning the full double range), so accumulation is exact and
/// therefore associative and commutative: any grouping of add()/merge()
/// calls over the same multiset of values yields the same value() bits.
/// Engines use it wherever a floating-point reduction must not depend on
/// message grouping, worker count or operator parallelism.
///
/// value() rounds the exact sum to nearest-even once. Results that fall
/// into the subnormal range may be double-rounded; they are still fully
/// deterministic.
class ExactSum {
public:
    ExactSum() = default;

    explicit ExactSum(double v) { add(v); }

    void add(double v) {
        if (v == 0.0)
            return;
        if (!std::isfinite(v))
            throw std::invalid_argument("ExactSum: non-finite summand");
        const bool neg = std::signbit(v);
        int e = 0;
        const double f = std::frexp(std::fabs(v), &e); // f in [0.5, 1)
        const auto mant = static_cast<std::uint64_t>(std::ldexp(f, 53));
        const int pos = e - 53 + kBias; // >= 0 even for subnormals
        const int limb = pos >> 6;
        const int shift = pos & 63;
        const unsigned __int128 wide = static_cast<unsigned __int128>(mant) << shift;
        const auto lo = static_cast<std::uint64_t>(wide);
        const auto hi = static_cast<std::uint64_t>(wide >> 64);
        if (neg) {
            limb_[limb] -= static_cast<__int128>(lo);
            limb_[limb + 1] -= static_cast<__int128>(hi);
        } else {
            limb_[limb] += static_cast<__int128>(lo);
            limb_[limb + 1] += static_cast<__int128>(hi);
        }
    }

    void merge(const ExactSum &other) {
        for (std::size_t i = 0; i < kLimbs; ++i)
            limb_[i] += other.limb_[i];
    }

    /// The exact sum rounded once to the nearest double (ties to even).
    double value() const {
        bool negative = false;
        std::array<std::uint64_t, kLimbs> mag;
        normalize(negative, mag);

        int top = kLimbs - 1;
        while (top >= 0 && mag[top] == 0)
            --top;
        if (top < 0)
            return 0.0;

        const int high = 64 * top + (63 - std::countl_zero(mag[top]));
        std::uint64_t mantissa;
        bool round_up = false;
        if (high <= 52) {
            mantissa = mag[0] << (52 - high);
        } else {
            mantissa = bits_at(mag, high - 52);
            const bool guard = bit_at(mag, high - 53);
            const bool sticky = high >= 54 && any_bits_below(mag, high - 53);
            round_up = guard && (sticky || (mantissa & 1));
        }
        int exp = high - 52;
        if (round_up && ++mantissa == (1ULL << 53)) {
            mantissa >>= 1;
            ++exp;
        }
        const double r = std::ldexp(static_cast<double>(mantissa), exp - kBias);
        return negative ? -r : r;
    }

    friend bool operator==(const ExactSum &a, const ExactSum &b) {
        bool na = false, nb = false;
        std::array<std::uint64_t, kLimbs> ma, mb;
        a.normalize(na, ma);
        b.normalize(nb, mb);
        if (ma == mb)
            return na == nb || is_all_zero(ma);
        return false;
    }

    static constexpr std::size_t kLimbs = 36;

    /// Canonical little-endian digits plus sign, for serialization.
    void canonical_form(bool &negative, std::array<std::uint64_t, kLimbs> &digits) const {
        normalize(negative, digits);
    }

    static ExactSum from_canonical(bool negative, const std::array<std::uint64_t, kLimbs> &digits) {
        ExactSum s;
        for (std::size_t i = 0; i < kLimbs; ++i) {
            s.limb_[i] = static_cast<__int128>(digits[i]);
            if (negative)
                s.limb_[i] = -s.limb_[i];
        }
        return s;
    }

private:
    static constexpr int kBias = 1126; // window 0 bit weight = 2^-1126

    // Carry-propagate the signed limbs into sign + base-2^64 magnitude digits.
    void normalize(bool &negative, std::array<std::uint64_t, kLimbs> &mag) const {
        __int128 carry = 0;
        for (std::size_t i = 0; i < kLimbs; ++i) {
            const __int128 cur = limb_[i] + carry;
            const auto low = static_cast<std::uint64_t>(cur);
            mag[i] = low;
            carry = (cur - static_cast<__int128>(low)) >> 64;
        }
        negative = carry < 0;
        if (negative) {
            // Two's complement over the digit array.
            std::uint64_t c = 1;
            for (std::size_t i = 0; i < kLimbs; ++i) {
                const std::uint64_t flipped = ~mag[i];
                mag[i] = flipped + c;
                c = (c != 0 && mag[i] == 0) ? 1 : 0;
            }
        }
    }

    static bool is_all_zero(const std::array<std::uint64_t, kLimbs> &mag) {
        for (auto d : mag)
            if (d != 0)
                return false;
        return true;
    }

    // 53 bits starting at position `lo`.
    static std::uint64_t bits_at(const std::array<std::uint64_t, kLimbs> &mag, int lo) {
        const int idx = lo >> 6;
        const int sh = lo & 63;
        std::uint64_t r = mag[idx] >> sh;
        if (sh != 0 && idx + 1 < static_cast<int>(kLimbs))
            r |= mag[idx + 1] << (64 - sh);
        return r & ((1ULL << 53) - 1);
    }

    static bool bit_at(const std::array<std::uint64_t, kLimbs> &mag, int pos) {
        if (pos < 0)
            return false;
        return (mag[pos >> 6] >> (pos & 63)) & 1;
    }

    // Any set bit strictly below position `pos`.
    static bool any_bits_below(const std::array<std::uint64_t, kLimbs> &mag, int pos) {
        const int idx = pos >> 6;
        const int sh = pos & 63;
        for (int i = 0; i < idx; ++i)
            if (mag[i] != 0)
                return true;
        if (sh == 0)
            return false;
        return (mag[idx] & ((1ULL << sh) - 1)) != 0;
    }

    std::array<__int128, kLimbs> limb_{};
};

} // namespace graphsim
