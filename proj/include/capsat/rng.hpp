#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace capsat {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Pure: the same (key, counter) always yields the
/// same four words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer, used to derive independent keys from a user seed.
std::uint64_t mix64(std::uint64_t x);

/// Derives a 64-bit key for one consumer of randomness. Distinct domain tags
/// give statistically independent streams for the same user seed.
std::uint64_t derive_key(std::uint64_t seed, std::uint64_t domain);

/// Well-known domain tags.
namespace domain {
inline constexpr std::uint64_t brownian = 0x42524f574e49414eULL;
inline constexpr std::uint64_t ball = 0x42414c4c554e4946ULL;
inline constexpr std::uint64_t gauss = 0x4741555353434c44ULL;
inline constexpr std::uint64_t shuffle = 0x53485546464c4521ULL;
inline constexpr std::uint64_t init = 0x494e495457454947ULL;
inline constexpr std::uint64_t noise = 0x4e4f495345414447ULL;
inline constexpr std::uint64_t sparsify = 0x4a4c535041525345ULL;
inline constexpr std::uint64_t dataset = 0x44415441534554ULL;
}  // namespace domain

/// Counter-based stream. The position within the stream is the only mutable
/// state; two streams built from the same (key, a, b) produce identical
/// sequences regardless of what other streams have been consumed.
class CounterStream {
 public:
  CounterStream(std::uint64_t key, std::uint64_t a, std::uint64_t b = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1), 53-bit resolution.
  double uniform();
  /// Uniform in (0, 1], 53-bit resolution.
  double uniform_open_low();
  double normal();
  void fill_normal(std::span<double> out);
  /// Uniform integer in [0, bound) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t bound);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t a_;
  std::uint32_t b_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace capsat
