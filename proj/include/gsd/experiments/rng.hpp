#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace gsd::experiments {

using Engine = std::mt19937_64;

/// One splitmix64 step; a bijective mixer on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the stream at `path` below `root`. Streams depend only on their
/// path, so results do not depend on evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = splitmix64(root);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

inline Engine make_engine(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  return Engine(derive_seed(root, path));
}

/// Stream labels, so call sites read as derive_seed(seed, {kNoise, level, repeat}).
enum Stream : std::uint64_t { kGraph = 1, kSignal = 2, kNoise = 3, kMethod = 4 };

}  // namespace gsd::experiments
