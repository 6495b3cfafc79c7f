#pragma once
// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011).
//
// A stream is fully determined by (key, stream id): the key is the master
// seed and the stream id is derived from (stage, trial, attempt). Drawing
// never depends on scheduling, so Monte-Carlo loops can be split across
// threads without changing a single bit of the output.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace eqlab {

using Philox4x32Block = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

/// One application of the Philox4x32-10 bijection.
inline Philox4x32Block philox4x32_10(Philox4x32Block ctr, Philox4x32Key key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

/// SplitMix64 finaliser; used to spread structured ids over 64 bits.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Stream id for (stage, trial, attempt). Stage names are hashed with FNV-1a.
inline std::uint64_t stream_id(std::string_view stage, std::uint64_t trial, std::uint64_t attempt = 0) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char ch : stage) h = (h ^ ch) * 0x100000001B3ull;
  return mix64(mix64(h ^ mix64(trial)) + attempt);
}

class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0u, 0u} {}

  Rng(std::uint64_t seed, std::string_view stage, std::uint64_t trial, std::uint64_t attempt = 0)
      : Rng(seed, stream_id(stage, trial, attempt)) {}

  std::uint32_t next_u32() {
    if (used_ == 4) refill();
    return block_[used_++];
  }
  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }
  /// Uniform in the open interval (0, 1) with 53 random bits.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }
  /// Standard normal by Box–Muller (pairs cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double a = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  void refill() {
    block_ = philox4x32_10(ctr_, key_);
    used_ = 0;
    if (++ctr_[2] == 0) ++ctr_[3];
  }

  Philox4x32Key key_;
  Philox4x32Block ctr_;
  Philox4x32Block block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace eqlab
