#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mm {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
    return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

// Bounded draw and shuffle are hand-rolled: std::uniform_int_distribution and
// std::shuffle are implementation-defined, and equal seeds must reproduce
// bit-identical results everywhere.
inline std::size_t draw_index(std::mt19937_64& eng, std::size_t n) {
    return static_cast<std::size_t>(eng() % n);
}

template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& eng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[draw_index(eng, i)]);
    }
}

}  // namespace mm
