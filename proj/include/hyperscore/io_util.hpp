#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

#include "hyperscore/common.hpp"

// Little-endian binary stream helpers shared by the index and tensor file
// formats. Short reads surface as FormatError::truncated so callers can map
// them to a stable exit code.

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace hyperscore::ioutil {

inline std::ofstream open_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Code::malformed, "cannot open for writing: " + path);
    return out;
}

inline std::ifstream open_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatError::Code::malformed, "cannot open for reading: " + path);
    return in;
}

inline void write_bytes(std::ostream& out, const void* data, std::size_t len) {
    out.write(static_cast<const char*>(data), std::streamsize(len));
    if (!out) throw FormatError(FormatError::Code::malformed, "write failed");
}

inline void read_bytes(std::istream& in, void* data, std::size_t len, const std::string& what) {
    in.read(static_cast<char*>(data), std::streamsize(len));
    if (std::size_t(in.gcount()) != len)
        throw FormatError(FormatError::Code::truncated, "truncated file while reading " + what);
}

template <class T>
void write_pod(std::ostream& out, T value) {
    write_bytes(out, &value, sizeof(T));
}

template <class T>
T read_pod(std::istream& in, const std::string& what) {
    T value;
    read_bytes(in, &value, sizeof(T), what);
    return value;
}

inline void write_string(std::ostream& out, const std::string& s) {
    if (s.size() > 0xFFFF)
        throw ConfigError("string too long for u16 length prefix: " + std::to_string(s.size()));
    write_pod<std::uint16_t>(out, std::uint16_t(s.size()));
    write_bytes(out, s.data(), s.size());
}

inline std::string read_string(std::istream& in, const std::string& what) {
    auto len = read_pod<std::uint16_t>(in, what + " length");
    std::string s(len, '\0');
    if (len > 0) read_bytes(in, s.data(), len, what);
    return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& format) {
    char got[4];
    read_bytes(in, got, 4, format + " magic");
    if (got[0] != magic[0] || got[1] != magic[1] || got[2] != magic[2] || got[3] != magic[3])
        throw FormatError(FormatError::Code::bad_magic, "not a " + format + " file");
}

inline void expect_version(std::istream& in, std::uint32_t supported, const std::string& format) {
    auto version = read_pod<std::uint32_t>(in, format + " version");
    if (version != supported)
        throw FormatError(FormatError::Code::bad_version,
                          format + " version " + std::to_string(version) + " unsupported, expected " +
                              std::to_string(supported));
}

}  // namespace hyperscore::ioutil
