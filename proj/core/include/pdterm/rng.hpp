#pragma once

#include <cstdint>
#include <random>

namespace pdterm {

// splitmix64; used to decorrelate derived seeds.
inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent per-entity stream: the pair (seed, id) fully determines the
// sequence, so work can be sharded across threads in any order.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t id) {
    return std::mt19937_64(mix64(mix64(seed) ^ mix64(id + 0x51ed270b7a4fd1ULL)));
}

}  // namespace pdterm
