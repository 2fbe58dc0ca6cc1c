#pragma once

// Little-endian primitive readers/writers shared by the NTKM/NTKW/NTKD formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

#include "pntk/error.hpp"

namespace pntk::binio {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw Error(ErrorKind::FormatError, std::string("truncated input while reading ") + what);
    }
    return value;
}

inline void put_magic(std::ostream& out, std::string_view magic) {
    out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& in, std::string_view magic) {
    std::array<char, 8> buf{};
    if (magic.size() > buf.size() || !in.read(buf.data(), static_cast<std::streamsize>(magic.size()))) {
        throw Error(ErrorKind::FormatError, "truncated input while reading magic");
    }
    if (std::string_view(buf.data(), magic.size()) != magic) {
        throw Error(ErrorKind::FormatError, "bad magic, expected " + std::string(magic));
    }
}

inline void put_string(std::ostream& out, std::string_view s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in, const char* what) {
    auto n = get<std::uint32_t>(in, what);
    std::string s(n, '\0');
    if (n > 0 && !in.read(s.data(), n)) {
        throw Error(ErrorKind::FormatError, std::string("truncated input while reading ") + what);
    }
    return s;
}

inline std::uint32_t read_be32(const unsigned char* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
           std::uint32_t{p[3]};
}

// FNV-1a, used for content hashes in manifests and sidecars.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace pntk::binio
