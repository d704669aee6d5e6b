#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pfsplit {

// splitmix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (auto p : parts) h = mix64(h ^ mix64(p));
  return h;
}

// Stream tags keep topology and traffic draws independent for one seed.
enum class Stream : std::uint64_t { Sites = 1, SmallCells = 2, Ues = 3, Shadowing = 4, Arrivals = 5 };

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  return std::mt19937_64(derive_seed({seed, static_cast<std::uint64_t>(stream), index}));
}

}  // namespace pfsplit
