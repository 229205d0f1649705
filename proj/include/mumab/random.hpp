#pragma once

#include <cstdint>
#include <random>

namespace mumab {

// All randomness flows through 64-bit Mersenne Twister streams. The helpers
// below avoid the standard distributions so draws are identical across
// standard library implementations.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent seed for sub-stream (stream, index) of a base seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0) noexcept
{
    return splitmix64(splitmix64(splitmix64(base) ^ stream) + index);
}

// Uniform on [0, 1) with 53 bits of resolution.
inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on {0, ..., n-1}; n must be positive.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n)
{
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

} // namespace mumab
