// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// Counter-based RNG. Every draw is a pure function of (seed, stream, counter),
// so checkpoint resume and any parallel schedule reproduce the same values.

#pragma once

#include <cmath>
#include <cstdint>

namespace nff::rng {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline uint64_t bits(uint64_t seed, uint64_t stream, uint64_t counter) {
    uint64_t k = splitmix64(seed ^ splitmix64(stream ^ 0x85EBCA77C2B2AE63ull));
    return splitmix64(k ^ splitmix64(counter ^ 0xD6E8FEB86659FD93ull));
}

// Uniform in [0, 1).
inline double uniform(uint64_t seed, uint64_t stream, uint64_t counter) {
    return static_cast<double>(bits(seed, stream, counter) >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). n must be > 0. Tiny modulo bias is irrelevant here.
inline uint64_t index(uint64_t seed, uint64_t stream, uint64_t counter, uint64_t n) {
    return bits(seed, stream, counter) % n;
}

// Standard normal via Box-Muller; consumes counters 2c and 2c+1 of a paired space.
inline double normal(uint64_t seed, uint64_t stream, uint64_t counter) {
    uint64_t b1 = bits(seed, stream, 2 * counter);
    uint64_t b2 = bits(seed, stream, 2 * counter + 1);
    double u1 = (static_cast<double>(b1 >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
    double u2 = static_cast<double>(b2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
}

// Stateful convenience wrapper. The cursor is plain data; persist it to resume.
struct Stream {
    uint64_t seed = 0;
    uint64_t stream = 0;
    uint64_t cursor = 0;

    double next_uniform() { return uniform(seed, stream, cursor++); }
    double next_normal() { return normal(seed, stream, cursor++); }
    uint64_t next_index(uint64_t n) { return index(seed, stream, cursor++, n); }
};

} // namespace nff::rng
