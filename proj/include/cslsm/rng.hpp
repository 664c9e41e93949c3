#pragma once

#include <cmath>
#include <cstdint>

// Counter-based deterministic PRNG built on the splitmix64 finalizer.
// Every draw is a pure function of (seed, stream, index), so generation is
// splittable: parallel and serial execution produce identical values, and
// file formats only need to store the seed.

namespace cslsm::rng {

/// splitmix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// 64-bit key for draw `index` of stream `stream` under `seed`.
constexpr std::uint64_t counter_key(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index) {
    return mix64(mix64(mix64(seed) ^ stream) ^ index);
}

/// Uniform double in [0, 1) with 53 random mantissa bits.
inline double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return static_cast<double>(counter_key(seed, stream, index) >> 11) * 0x1.0p-53;
}

/// Standard normal draw via Box-Muller; consumes indices 2k and 2k+1 of the stream.
inline double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    // u1 in (0, 1] so the logarithm is finite.
    const double u1 =
        (static_cast<double>(counter_key(seed, stream, 2 * index) >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform01(seed, stream, 2 * index + 1);
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

/// Sequential draw helper for code that consumes a variable number of values
/// (rejection sampling, shuffles). Still a pure function of (seed, stream).
class Sequence {
public:
    Sequence(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    double next_uniform() { return uniform01(seed_, stream_, n_++); }

    double next_gaussian() { return gaussian(seed_, stream_, n_++); }

    std::uint64_t next_u64() { return counter_key(seed_, stream_, n_++); }

    /// Uniform integer in [0, bound) by 64-bit multiply-shift reduction.
    std::uint64_t next_below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(next_uniform() * static_cast<double>(bound)) %
               bound;
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t n_ = 0;
};

} // namespace cslsm::rng
