#pragma once

// Seeding contract: every stochastic operation takes a 64-bit seed and
// derives independent streams from it with derive_seed(seed, stream). The
// engine is std::mt19937_64, normals come from Boost's ziggurat sampler.

#include <cstdint>
#include <random>
#include <string_view>

#include <boost/random/normal_distribution.hpp>

namespace webrel {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Sub-seed for stream `stream` of master seed `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// FNV-1a of a tag, for naming streams ("q1", "positions", ...).
constexpr std::uint64_t stream_id(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) noexcept {
  return derive_seed(master, stream_id(tag));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

/// Uniform on the open interval (0, 1); consumes one engine output.
inline double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double standard_normal(Rng& rng) {
  boost::random::normal_distribution<double> dist;
  return dist(rng);
}

}  // namespace webrel
