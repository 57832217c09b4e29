#pragma once

#include <cstdint>
#include <random>

namespace bvs {

using Rng = std::mt19937_64;

// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent reproducible stream for (seed, stage, index).
inline Rng make_stream(std::uint64_t seed, std::uint64_t stage, std::uint64_t index) {
  const std::uint64_t a = mix64(seed ^ mix64(stage + 0x632be59bd9b4e019ULL));
  const std::uint64_t b = mix64(a ^ mix64(index + 0x85157af5ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

// Uniform on [0, 1) with 53 random bits; identical across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double prob) { return uniform01(rng) < prob; }

}  // namespace bvs
