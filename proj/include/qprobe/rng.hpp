#pragma once

// Seeded random source shared by every sampler in the library.
//
// std::mt19937_64 output is fixed by the standard, but the std::*_distribution
// adaptors are not, so the variate transforms live here to keep sample streams
// bit-identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <random>

namespace qprobe {

struct RngSeed {
  std::uint64_t value = 1;
};

inline constexpr const char* kGeneratorName = "mt19937_64";

// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed for the `index`-th independent stream (replication, sweep row, ...).
constexpr RngSeed derive_seed(RngSeed base, std::uint64_t index) {
  return RngSeed{splitmix64(base.value ^ splitmix64(index + 1))};
}

class Rng {
 public:
  explicit Rng(RngSeed seed) : engine_(seed.value) {}

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Exponential with the given rate; strictly positive.
  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qprobe
