#pragma once

#include <cstdint>
#include <string_view>

namespace lunasim::sim {

// FNV-1a, 64-bit. Stable across platforms; used for component stream ids and
// message ids derived from payload bytes.
constexpr std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// splitmix64 output function. Mixes a state value into a well-distributed
// 64-bit word; also serves as the seed scrambler for Rng streams.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace lunasim::sim
