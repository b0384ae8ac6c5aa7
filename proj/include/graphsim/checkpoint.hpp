#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "aggregator.hpp"
#include "common.hpp"
#include "exact_sum.hpp"

namespace graphsim {

class ByteWriter {
public:
    void put_u8(std::uint8_t v) { buf_.push_back(v); }

    void put_u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i)
            buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void put_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i)
            buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

    void put_bytes(const void *data, std::size_t len) {
        const auto *p = static_cast<const std::uint8_t *>(data);
        buf_.insert(buf_.end(), p, p + len);
    }

    void put_string(const std::string &s) {
        put_u64(s.size());
        put_bytes(s.data(), s.size());
    }

    const std::vector<std::uint8_t> &bytes() const { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t get_u8() {
        need(1);
        return data_[pos_++];
    }

    std::uint32_t get_u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
        return v;
    }

    std::uint64_t get_u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
        return v;
    }

    double get_f64() { return std::bit_cast<double>(get_u64()); }

    void get_bytes(void *out, std::size_t len) {
        need(len);
        std::memcpy(out, data_.data() + pos_, len);
        pos_ += len;
    }

    std::string get_string() {
        const std::uint64_t len = get_u64();
        need(len);
        std::string s(reinterpret_cast<const char *>(data_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    bool exhausted() const { return pos_ == data_.size(); }

private:
    void need(std::size_t len) const {
        if (pos_ + len > data_.size())
            throw CheckpointError("truncated checkpoint section");
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

/// Byte codec for vertex states and message payloads. Trivially copyable
/// types are memcpy'd; container and domain types specialize.
template <typename T>
struct Codec {
    static_assert(std::is_trivially_copyable_v<T>,
                  "specialize graphsim::Codec for non-trivially-copyable types");

    static void encode(ByteWriter &w, const T &v) { w.put_bytes(&v, sizeof(T)); }

    static T decode(ByteReader &r) {
        T v;
        r.get_bytes(&v, sizeof(T));
        return v;
    }
};

template <typename T>
struct Codec<std::vector<T>> {
    static void encode(ByteWriter &w, const std::vector<T> &v) {
        w.put_u64(v.size());
        for (const auto &item : v)
            Codec<T>::encode(w, item);
    }

    static std::vector<T> decode(ByteReader &r) {
        std::vector<T> v(r.get_u64());
        for (auto &item : v)
            item = Codec<T>::decode(r);
        return v;
    }
};

inline void encode_agg_value(ByteWriter &w, const AggValue &v) {
    w.put_u8(static_cast<std::uint8_t>(v.index()));
    if (std::holds_alternative<bool>(v))
        w.put_u8(std::get<bool>(v) ? 1 : 0);
    else if (std::holds_alternative<std::int64_t>(v))
        w.put_u64(static_cast<std::uint64_t>(std::get<std::int64_t>(v)));
    else
        w.put_f64(std::get<double>(v));
}

inline AggValue decode_agg_value(ByteReader &r) {
    switch (r.get_u8()) {
    case 0:
        return r.get_u8() != 0;
    case 1:
        return static_cast<std::int64_t>(r.get_u64());
    case 2:
        return r.get_f64();
    default:
        throw CheckpointError("bad aggregator value tag");
    }
}

/// Self-describing checkpoint container: magic, version, engine tag,
/// superstep, then length-prefixed named byte sections. Round-trips
/// bit-exactly; writes go through a temp file and a rename.
struct CheckpointFile {
    static constexpr char kMagic[8] = {'G', 'S', 'C', 'K', 'P', 'T', '0', '1'};
    static constexpr std::uint32_t kVersion = 1;

    std::string engine_tag;
    std::uint64_t superstep = 0;
    std::vector<std::pair<std::string, std::vector<std::uint8_t>>> sections;

    void add_section(const std::string &name, std::vector<std::uint8_t> bytes) {
        sections.emplace_back(name, std::move(bytes));
    }

    const std::vector<std::uint8_t> &section(const std::string &name) const {
        for (const auto &[n, bytes] : sections)
            if (n == name)
                return bytes;
        throw CheckpointError("missing checkpoint section: " + name);
    }

    void write(const std::filesystem::path &path) const {
        ByteWriter w;
        w.put_bytes(kMagic, sizeof(kMagic));
        w.put_u32(kVersion);
        w.put_string(engine_tag);
        w.put_u64(superstep);
        w.put_u32(static_cast<std::uint32_t>(sections.size()));
        for (const auto &[name, bytes] : sections) {
            w.put_string(name);
            w.put_u64(bytes.size());
            w.put_bytes(bytes.data(), bytes.size());
        }
        const std::filesystem::path tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out)
                throw CheckpointError("cannot open checkpoint file " + tmp.string());
            out.write(reinterpret_cast<const char *>(w.bytes().data()),
                      static_cast<std::streamsize>(w.bytes().size()));
            if (!out)
                throw CheckpointError("short write to " + tmp.string());
        }
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec)
            throw CheckpointError("cannot publish checkpoint " + path.string() + ": " +
                                  ec.message());
    }

    static CheckpointFile read(const std::filesystem::path &path,
                               const std::string &expected_tag) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw CheckpointError("cannot open checkpoint file " + path.string());
        std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
        ByteReader r(raw);
        char magic[8];
        r.get_bytes(magic, sizeof(magic));
        if (std::memcmp(magic, kMagic, sizeof(magic)) != 0)
            throw CheckpointError("bad checkpoint magic in " + path.string());
        if (r.get_u32() != kVersion)
            throw CheckpointError("unsupported checkpoint version in " + path.string());
        CheckpointFile f;
        f.engine_tag = r.get_string();
        if (!expected_tag.empty() && f.engine_tag != expected_tag)
            throw CheckpointError("engine tag mismatch: checkpoint is '" + f.engine_tag +
                                  "', expected '" + expected_tag + "'");
        f.superstep = r.get_u64();
        const std::uint32_t count = r.get_u32();
        for (std::uint32_t i = 0; i < count; ++i) {
            std::string name = r.get_string();
            std::vector<std::uint8_t> bytes(r.get_u64());
            r.get_bytes(bytes.data(), bytes.size());
            f.sections.emplace_back(std::move(name), std::move(bytes));
        }
        if (!r.exhausted())
            throw CheckpointError("trailing bytes in checkpoint " + path.string());
        return f;
    }
};

} // namespace graphsim
