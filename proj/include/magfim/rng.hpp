#pragma once

#include <cstdint>
#include <random>

namespace magfim {

/// splitmix64 finalizer; used to decorrelate (seed, index) keys into engine seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic per-stream key. Streams keyed by (seed, index) are independent
/// of evaluation order and thread count.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0) {
    return splitmix64(splitmix64(seed ^ 0x5851f42d4c957f2dULL) ^ splitmix64(index + 0x14057b7ef767814fULL * salt));
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t index = 0, std::uint64_t salt = 0) {
    return std::mt19937_64(stream_key(seed, index, salt));
}

}  // namespace magfim
