#pragma once

#include <array>
#include <cstdint>

namespace pce {

// SplitMix64 finalizer; used for seeding and for deriving substream seeds.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t x);

// Seed of an independent substream: mix64(seed ^ mix64(index + golden)).
// Replicate b of a bootstrap or a simulation uses stream_seed(master, b).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

// xoshiro256** 1.0 (Blackman & Vigna), state filled from SplitMix64(seed).
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n), Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller (cosine branch; one draw consumes two uniforms).
  double normal();

 private:
  std::array<std::uint64_t, 4> s_;
};

}  // namespace pce
