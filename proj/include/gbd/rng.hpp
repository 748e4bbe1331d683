#pragma once

#include <cstddef>
#include <cstdint>

namespace gbd {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// Deterministic counter-based generator. Stream identity depends only on
// (seed, index), never on thread scheduling, so searches partitioned across
// workers reproduce the single-threaded result bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix64(seed + 0x9E3779B97F4A7C15ull * (index + 1)));
  }

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  // Uniform integer in [0, n), n > 0. Fixed-point multiply instead of
  // std::uniform_int_distribution, whose output is implementation-defined.
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace gbd
