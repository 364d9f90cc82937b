#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace satsensor {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit seed is the key; the stream index occupies the upper half of
/// the 128-bit counter and the draw index the lower half. Every (seed,
/// stream) pair is an independent sequence, so Monte Carlo trial i can use
/// stream i regardless of which thread evaluates it.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (lane_ == 2) {
      const Block ctr{static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
      block_ = bijection(ctr, key_);
      ++counter_;
      lane_ = 0;
    }
    const result_type out =
        static_cast<result_type>(block_[2 * lane_]) | (static_cast<result_type>(block_[2 * lane_ + 1]) << 32);
    ++lane_;
    return out;
  }

  /// The raw 10-round Philox permutation of one counter block.
  static Block bijection(Block ctr, Key key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  Key key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  Block block_{};
  int lane_ = 2;
};

}  // namespace satsensor
