#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace olive {

/// SplitMix64 finalizer. Used both as a seed mixer and as a stateless hash.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for a named pipeline stage: mix64(seed ^ fnv1a(stage)).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) noexcept;

/// Seed for the i-th member of a family (fold, tree, repeat, ...):
/// mix64(seed + (i + 1) * golden_gamma).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Stateless hash of a lattice coordinate, mapped to [0, 1).
double hash_unit(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                 std::uint64_t c) noexcept;

/// Seeded generator with distributions implemented here rather than through
/// <random>'s distributions, whose output is implementation-defined. The
/// engine itself (mt19937_64) is fully specified by the standard.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n); n must be > 0.
  std::size_t below(std::size_t n);

  // Standard normal via Box-Muller (no cached second value).
  double normal();

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace olive
