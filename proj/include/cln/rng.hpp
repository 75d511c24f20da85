#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cln {

using Rng = std::mt19937_64;

// splitmix64, used to whiten seed material before feeding the main generator.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d49bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream from (master seed, repetition, stage name).
// The same triple always yields the same stream, so experiment repetitions
// are reproducible regardless of scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t rep,
                                 std::string_view stage) {
  std::uint64_t h = splitmix64(master ^ 0x5851f42d4c957f2dULL);
  h = splitmix64(h ^ rep);
  for (unsigned char c : stage) {
    h = splitmix64(h ^ c);
  }
  return h;
}

inline Rng make_rng(std::uint64_t master, std::uint64_t rep,
                    std::string_view stage) {
  return Rng(derive_seed(master, rep, stage));
}

}  // namespace cln
