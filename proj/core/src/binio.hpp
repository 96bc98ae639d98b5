#pragma once

// Internal little-endian binary IO helpers shared by checkpoint and cache
// serializers. Byte order is explicit so files are portable.

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "fnetsum/common.hpp"

namespace fnetsum::binio {

inline void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint32_t read_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw ParseError(std::string("truncated file while reading ") + what);
    }
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

inline std::uint64_t read_u64(std::istream& in, const char* what) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) {
        throw ParseError(std::string("truncated file while reading ") + what);
    }
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

inline double read_f64(std::istream& in, const char* what) {
    const std::uint64_t bits = read_u64(in, what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline std::string read_string(std::istream& in, const char* what) {
    const std::uint32_t n = read_u32(in, what);
    std::string s(n, '\0');
    if (n > 0 && !in.read(s.data(), n)) {
        throw ParseError(std::string("truncated file while reading ") + what);
    }
    return s;
}

}  // namespace fnetsum::binio
