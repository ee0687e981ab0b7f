#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace simper {

// SplitMix64 generator. Every random draw in the project flows through this
// so that runs are reproducible bit-exactly from integer keys alone.
//
// Key derivation (documented so other implementations can match it):
//   state = 0
//   for each part p: state = finalize(state ^ finalize(p))
// where finalize() is the SplitMix64 output mix below. Streams are then
// advanced with the standard gamma 0x9E3779B97F4A7C15.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t finalize(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) {
        std::uint64_t state = 0;
        for (std::uint64_t p : parts) state = finalize(state ^ finalize(p));
        return state;
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n), n >= 1. Rejection-free modulo is fine here:
    // n is always tiny relative to 2^64 so the bias is unobservable.
    std::uint64_t uniform_int(std::uint64_t n) { return n <= 1 ? 0 : next_u64() % n; }

    // Standard normal via Box-Muller; consumes exactly two draws per value.
    double normal() {
        double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

private:
    std::uint64_t state_;
};

// FNV-1a 64-bit, used for content checksums (sample blobs, config hashes).
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xCBF29CE484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace simper
