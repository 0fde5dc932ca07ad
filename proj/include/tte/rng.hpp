#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tte {

// splitmix64 finalizer; used to derive independent sub-stream seeds from a
// single root seed so that parallel generation stays deterministic.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// stream_seed = mix(seed, stream_index). Chain calls for nested streams,
// e.g. mix_seed(mix_seed(seed, imputation), subject_hash).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x517CC1B727220A95ull));
}

// FNV-1a; stable key for string ids used in per-subject stream derivation.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001B3ull;
    }
    return h;
}

// Deterministic generator: the mt19937_64 engine is fully specified by the
// standard, and all variate transforms below are hand-rolled, so identical
// seeds give identical draws on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller; two uniforms per draw, no cached spare.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    // [0, n)
    std::uint64_t integer(std::uint64_t n) {
        auto v = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
        return v >= n ? n - 1 : v;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace tte
