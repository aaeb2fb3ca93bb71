#pragma once

#include <cstdint>
#include <random>

namespace noisycons {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; a bijective mixer used to derive independent seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of stream `index` under master seed `seed`. Streams depend only on
/// (seed, index), so work split across threads draws the same numbers as a
/// serial run.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

inline Engine make_stream(std::uint64_t seed, std::uint64_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(stream_seed(seed, index)),
                      static_cast<std::uint32_t>(stream_seed(seed, index) >> 32)};
    return Engine(seq);
}

} // namespace noisycons
