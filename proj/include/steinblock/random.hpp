#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace steinblock {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Generator for the substream identified by (seed, ids...).  Streams depend
/// only on their identifiers, never on the order in which they are drawn.
inline std::mt19937_64 substream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids = {}) {
    std::uint64_t h = splitmix64(seed ^ 0x5b1e5b1e5b1e5b1eULL);
    for (std::uint64_t id : ids) h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
    return std::mt19937_64(h);
}

}  // namespace steinblock
