#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

// Little-endian primitive packing. All wire and file formats in this
// library are little-endian by definition, independent of host order.

namespace lft::bytes {

inline void put_u32le(std::uint8_t* p, std::uint32_t v) {
    p[0] = static_cast<std::uint8_t>(v);
    p[1] = static_cast<std::uint8_t>(v >> 8);
    p[2] = static_cast<std::uint8_t>(v >> 16);
    p[3] = static_cast<std::uint8_t>(v >> 24);
}

inline void put_u64le(std::uint8_t* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline void put_f64le(std::uint8_t* p, double v) {
    put_u64le(p, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t get_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline std::uint64_t get_u64le(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

inline double get_f64le(const std::uint8_t* p) {
    return std::bit_cast<double>(get_u64le(p));
}

inline void append_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    std::uint8_t buf[4];
    put_u32le(buf, v);
    out.insert(out.end(), buf, buf + 4);
}

inline void append_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    std::uint8_t buf[8];
    put_u64le(buf, v);
    out.insert(out.end(), buf, buf + 8);
}

inline void append_f64le(std::vector<std::uint8_t>& out, double v) {
    append_u64le(out, std::bit_cast<std::uint64_t>(v));
}

} // namespace lft::bytes
