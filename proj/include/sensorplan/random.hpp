#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sensorplan {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive a child seed from a base seed and a list of integer tags.
/// Same inputs always give the same seed.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = mix64(base);
  for (auto t : tags) s = mix64(s ^ mix64(t + 0x632be59bd9b4e019ULL));
  return s;
}

// Tags separating the independent random streams of one run.
namespace stream {
inline constexpr std::uint64_t truth_noise = 1;
inline constexpr std::uint64_t forecast = 2;
inline constexpr std::uint64_t enkf = 3;
inline constexpr std::uint64_t measurement = 4;
inline constexpr std::uint64_t planner = 5;
inline constexpr std::uint64_t initial_guess = 6;
inline constexpr std::uint64_t ensemble_init = 7;
inline constexpr std::uint64_t forcing = 8;
inline constexpr std::uint64_t rain_forecast = 9;
inline constexpr std::uint64_t random_policy = 10;
}  // namespace stream

}  // namespace sensorplan
