#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gemid {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of the named sub-stream `name`, item `index`, under `master`.
/// Stages (synth, select, train...) draw from their own stream so any of
/// them can be rerun in isolation with the same result.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view name,
                                    std::uint64_t index = 0) noexcept {
  return mix64(mix64(master ^ fnv1a64(name)) + index);
}

inline Rng make_rng(std::uint64_t master, std::string_view name, std::uint64_t index = 0) {
  return Rng(derive_seed(master, name, index));
}

}  // namespace gemid
