#pragma once

#include <cstdint>

namespace netprice {

/// SplitMix64 finalizer (Steele, Lea & Flood). Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Combine a parent seed with an index into an independent child seed.
/// Used for (base_seed, run_index, attempt) splitting and for
/// per-purpose sub-streams, so results never depend on evaluation order.
constexpr std::uint64_t split_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(parent) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Counter-based generator: the i-th draw is splitmix64(key + i * gamma).
/// Bitwise reproducible on every platform; only integer arithmetic is involved
/// up to the final conversion to double.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t next_u64() noexcept {
    return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * counter_++);
  }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;

  /// Uniform on (0, 1], safe as a logarithm argument.
  double uniform_open() noexcept;

  /// Uniform integer in [0, bound); bound must be positive. Unbiased.
  std::uint64_t uniform_index(std::uint64_t bound) noexcept;

  /// Standard-normal draw by the Box-Muller transform. Both variates of a pair
  /// are used; the spare is cached.
  double normal() noexcept;

  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace netprice
