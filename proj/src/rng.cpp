#include "capsat/rng.hpp"

#include <cmath>
#include <numbers>

namespace capsat {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_key(std::uint64_t seed, std::uint64_t domain) {
  return mix64(mix64(seed) ^ domain);
}

CounterStream::CounterStream(std::uint64_t key, std::uint64_t a, std::uint64_t b)
    : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
      a_(a),
      b_(static_cast<std::uint32_t>(mix64(b))) {}

void CounterStream::refill() {
  buf_ = philox4x32({static_cast<std::uint32_t>(a_), static_cast<std::uint32_t>(a_ >> 32), b_, block_},
                    key_);
  ++block_;
  buf_pos_ = 0;
}

std::uint64_t CounterStream::next_u64() {
  if (buf_pos_ > 2) refill();
  const std::uint64_t v = (static_cast<std::uint64_t>(buf_[buf_pos_]) << 32) | buf_[buf_pos_ + 1];
  buf_pos_ += 2;
  return v;
}

double CounterStream::uniform() { return to_unit(next_u64()); }

double CounterStream::uniform_open_low() { return 1.0 - uniform(); }

double CounterStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_open_low();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

void CounterStream::fill_normal(std::span<double> out) {
  for (double& v : out) v = normal();
}

std::uint64_t CounterStream::below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

}  // namespace capsat
