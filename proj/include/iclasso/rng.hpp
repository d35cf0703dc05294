#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace iclasso {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives the seed of an independent substream from a master seed and a
/// path of integer keys. The result depends only on its arguments, so a
/// Monte Carlo iteration gets the same stream whatever thread runs it.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = mix64(master);
    for (auto k : keys) h = mix64(h ^ mix64(k + 0x632BE59BD9B4E019ULL));
    return h;
}

/// Substream tags. Kept stable: changing them changes every derived draw.
namespace stream {
inline constexpr std::uint64_t dataset = 1;
inline constexpr std::uint64_t new_user = 2;
inline constexpr std::uint64_t cone = 3;
inline constexpr std::uint64_t replication = 4;
} // namespace stream

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

} // namespace iclasso
