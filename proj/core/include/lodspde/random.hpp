#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace lodspde {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed of `parent` keyed by an integer label.
constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::uint64_t key) noexcept {
  return mix64(mix64(parent ^ 0x9e3779b97f4a7c15ULL) + mix64(key + 1));
}

/// Child seed of `parent` keyed by a stream name (FNV-1a of the name).
constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return derive_seed(parent, h);
}

/// SplitMix64 generator; a counter-based stream keyed by its seed.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

}  // namespace lodspde
