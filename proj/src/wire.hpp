#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "sbp/comm.hpp"

namespace sbp::wire {

// All multi-byte values travel as 64-bit little-endian words so payloads are
// identical across hosts and byte-exact under round-trips.

inline void put_u64(std::string& out, std::uint64_t value) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((value >> (8 * b)) & 0xff));
}

inline void put_i64(std::string& out, std::int64_t value) {
    put_u64(out, static_cast<std::uint64_t>(value));
}

class Reader {
  public:
    Reader(std::string_view bytes, std::string what)
        : bytes_(bytes), what_(std::move(what)) {}

    std::uint64_t u64() {
        if (offset_ + 8 > bytes_.size()) throw CommError(what_ + ": truncated payload");
        std::uint64_t value = 0;
        for (int b = 0; b < 8; ++b)
            value |= static_cast<std::uint64_t>(
                         static_cast<unsigned char>(bytes_[offset_ + static_cast<size_t>(b)]))
                     << (8 * b);
        offset_ += 8;
        return value;
    }

    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

    // Leading record count, validated against the bytes actually present so a
    // corrupt count cannot drive a huge allocation.
    std::uint64_t count(size_t record_bytes) {
        const std::uint64_t n = u64();
        if (n > (bytes_.size() - offset_) / record_bytes)
            throw CommError(what_ + ": count exceeds payload size");
        return n;
    }

    void expect_done() const {
        if (offset_ != bytes_.size()) throw CommError(what_ + ": trailing bytes in payload");
    }

  private:
    std::string_view bytes_;
    std::string what_;
    size_t offset_ = 0;
};

}  // namespace sbp::wire
