#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "hemo/vec.hpp"

// Little-endian primitive IO shared by the proxy, dataset, frame and model
// file formats.

namespace hemo::io {

inline void put_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void get_bytes(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is) throw std::runtime_error("unexpected end of file");
}

inline void write_u32(std::ostream& os, std::uint32_t v) { put_bytes(os, &v, 4); }
inline void write_u64(std::ostream& os, std::uint64_t v) { put_bytes(os, &v, 8); }
inline void write_f32(std::ostream& os, float v) { put_bytes(os, &v, 4); }
inline void write_f64(std::ostream& os, double v) { put_bytes(os, &v, 8); }

inline std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v;
    get_bytes(is, &v, 4);
    return v;
}
inline std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v;
    get_bytes(is, &v, 8);
    return v;
}
inline float read_f32(std::istream& is) {
    float v;
    get_bytes(is, &v, 4);
    return v;
}
inline double read_f64(std::istream& is) {
    double v;
    get_bytes(is, &v, 8);
    return v;
}

inline void write_vec3_f32(std::ostream& os, const Vec3& v) {
    write_f32(os, static_cast<float>(v.x));
    write_f32(os, static_cast<float>(v.y));
    write_f32(os, static_cast<float>(v.z));
}

inline Vec3 read_vec3_f32(std::istream& is) {
    Vec3 v;
    v.x = read_f32(is);
    v.y = read_f32(is);
    v.z = read_f32(is);
    return v;
}

inline void write_magic(std::ostream& os, const char (&magic)[5]) { put_bytes(os, magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5], const std::string& what) {
    char buf[4];
    get_bytes(is, buf, 4);
    if (std::memcmp(buf, magic, 4) != 0) {
        throw std::runtime_error(what + ": bad magic, not a " + std::string(magic) + " file");
    }
}

}  // namespace hemo::io
