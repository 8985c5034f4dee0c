#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rtree {

// splitmix64 finalizer; also used to derive replicate streams.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Stream id for replicate `replicate` of a run seeded with `seed`:
//   mix64(mix64(seed) ^ (replicate + 0x9E3779B97F4A7C15)).
std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t replicate) noexcept;

// A seeded random stream. The engine output is fully specified by the standard, and the
// real-valued conversions below are done by hand so every platform draws identical bits.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  static Stream for_replicate(std::uint64_t seed, std::uint64_t replicate) {
    return Stream(derive_stream_seed(seed, replicate));
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_open_low() noexcept { return 1.0 - uniform(); }

  // Standard exponential by inversion.
  double exponential() noexcept { return -std::log(uniform_open_low()); }

  std::uint64_t bits() noexcept { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rtree
