#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace courtpipe {

/// FNV-1a, the project-wide content fingerprint (cache keys, version tags).
/// Not cryptographic; collisions merely cause a cache rebuild or reload.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

/// 128-bit hex digest from two independent FNV passes.
inline std::string content_digest(std::string_view data) {
    return to_hex(fnv1a64(data)) + to_hex(fnv1a64(data, 0x9e3779b97f4a7c15ULL));
}

}  // namespace courtpipe
