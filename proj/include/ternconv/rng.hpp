#pragma once

#include <cstdint>

namespace ternconv {

// Weyl increment of the SplitMix64 stream and an independent odd constant
// used to decorrelate column coordinates in the coordinate hash.
inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kColumnSalt = 0xC2B2AE3D27D4EB4FULL;

/// SplitMix64 finalizer. Pure, total, bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  std::uint64_t z = x;
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

/// Random-access form of the SplitMix64 stream: the word at position `index`
/// of the stream started at `seed`, without iterating.
constexpr std::uint64_t stream_word(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(seed + (index + 1) * kGoldenGamma);
}

/// Maps a 64-bit word to [-1, 1) using the top 53 bits, so the result is an
/// exactly representable double on every platform.
constexpr double word_to_uniform(std::uint64_t word) noexcept {
  const double u = static_cast<double>(word >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

/// Sequential convenience wrapper over the indexed stream. Used for dataset
/// synthesis and parameter init; weight generation goes through the
/// random-access functions directly.
class SplitMixStream {
 public:
  explicit SplitMixStream(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t next_word() noexcept { return stream_word(seed_, index_++); }

  /// Uniform in [0, 1).
  double next_unit() noexcept {
    return static_cast<double>(next_word() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [-1, 1).
  double next_uniform() noexcept { return word_to_uniform(next_word()); }

 private:
  std::uint64_t seed_;
  std::uint64_t index_ = 0;
};

}  // namespace ternconv
