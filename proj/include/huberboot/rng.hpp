#pragma once

#include <cstdint>
#include <random>

namespace huberboot {

// Finalizer from splitmix64. Good avalanche, cheap.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic substream: a fresh engine keyed by (seed, a, b, c).
//
// Every random quantity in this library is drawn from a substream whose key
// encodes what the draw is for (replication index, column index, and so on),
// never from a shared sequential stream. Work items can then run in any
// order, on any number of threads, and still produce identical bytes.
inline std::uint64_t subkey(std::uint64_t seed, std::uint64_t a = 0,
                            std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    return h;
}

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    return std::mt19937_64(subkey(seed, a, b, c));
}

}  // namespace huberboot
