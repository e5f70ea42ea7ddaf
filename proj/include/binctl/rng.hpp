// Seeded random streams. Every consumer gets its own engine derived from a
// master seed and a stream name, so reseeding one stream leaves the others
// untouched.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace binctl {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(master ^ splitmix64(h));
}

inline Rng make_stream(std::uint64_t master, std::string_view stream) { return Rng(derive_seed(master, stream)); }

/// Child engine seeded from the parent; advances the parent by one draw.
inline Rng split(Rng& parent) { return Rng(splitmix64(parent())); }

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace binctl
