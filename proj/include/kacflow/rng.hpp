#pragma once

// Counter-based random streams.
//
// The generator is Philox4x32-10 (Salmon et al., SC'11). A stream is the pair
// (seed, stream_id): the seed is the 64-bit Philox key, the stream id occupies
// the upper 64 bits of the 128-bit counter and a block index the lower 64
// bits. Two streams with different ids never share a counter block, so work
// can be partitioned by stream id and the output is independent of the order
// in which streams are consumed.
//
// Distributions are derived here rather than through <random> so that sample
// sequences are identical across standard library implementations.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace kacflow {

namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr Counter round(const Counter& ctr, const Key& key) {
  const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
  const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

// Philox4x32 with 10 rounds.
constexpr Counter block(Counter ctr, Key key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    ctr = round(ctr, key);
  }
  return ctr;
}

}  // namespace philox

class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : seed_(seed), stream_id_(stream_id) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    if (pos_ == 2) refill();
    return buf_[pos_++];
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on the open interval (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double exponential(double rate) noexcept { return -std::log(uniform_open()) / rate; }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // +1 or -1 with probability 1/2 each.
  double sign() noexcept { return (next_u64() >> 63) ? 1.0 : -1.0; }

  // Uniform index in [0, n) by rejection (n > 0).
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Independent child stream; children of distinct parents or indices differ.
  RngStream split(std::uint64_t index) const noexcept {
    return RngStream(seed_, mix(stream_id_ ^ mix(index + 0x632BE59BD9B4E019ull)));
  }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  void refill() noexcept {
    const philox::Counter ctr{static_cast<std::uint32_t>(counter_),
                              static_cast<std::uint32_t>(counter_ >> 32),
                              static_cast<std::uint32_t>(stream_id_),
                              static_cast<std::uint32_t>(stream_id_ >> 32)};
    const philox::Key key{static_cast<std::uint32_t>(seed_),
                          static_cast<std::uint32_t>(seed_ >> 32)};
    const philox::Counter out = philox::block(ctr, key);
    buf_[0] = (std::uint64_t{out[1]} << 32) | out[0];
    buf_[1] = (std::uint64_t{out[3]} << 32) | out[2];
    ++counter_;
    pos_ = 0;
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int pos_ = 2;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kacflow
