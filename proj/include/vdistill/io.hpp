#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "vdistill/errors.hpp"

// Little-endian primitives shared by the DVDC/DVDP/DVDS containers.

namespace vdistill::io {

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!os) throw IoError("write failed");
}

inline void read_bytes(std::istream& is, void* p, std::size_t n, const char* what) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
        throw TruncatedError(what);
    }
}

template <typename T>
void write_le(std::ostream& os, T value) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    using U = std::make_unsigned_t<T>;
    U u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(u >> (8 * i));
    write_bytes(os, buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const char* what) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    read_bytes(is, buf, sizeof(T), what);
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(buf[i]) << (8 * i);
    return static_cast<T>(u);
}

inline void write_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_le<std::uint32_t>(os, bits);
}

inline float read_f32(std::istream& is, const char* what) {
    std::uint32_t bits = read_le<std::uint32_t>(is, what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_le<std::uint64_t>(os, bits);
}

inline double read_f64(std::istream& is, const char* what) {
    std::uint64_t bits = read_le<std::uint64_t>(is, what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline void write_magic(std::ostream& os, const char magic[4]) {
    write_bytes(os, magic, 4);
}

inline void check_magic(std::istream& is, const char magic[4]) {
    char buf[4];
    read_bytes(is, buf, 4, "magic");
    if (std::memcmp(buf, magic, 4) != 0) {
        throw BadMagicError(std::string("expected ") + std::string(magic, 4));
    }
}

inline void check_version(std::uint16_t got, std::uint16_t expected, const char* container) {
    if (got != expected) {
        throw VersionMismatchError(std::string(container) + " v" + std::to_string(got) +
                                   ", supported v" + std::to_string(expected));
    }
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_le<std::uint16_t>(os, static_cast<std::uint16_t>(s.size()));
    write_bytes(os, s.data(), s.size());
}

inline std::string read_string(std::istream& is, const char* what) {
    std::uint16_t n = read_le<std::uint16_t>(is, what);
    std::string s(n, '\0');
    read_bytes(is, s.data(), n, what);
    return s;
}

}  // namespace vdistill::io
