#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

// Counter-based random generator (Philox4x32-10, Salmon et al. 2011).
// Streams are cheap: a stream id is folded into the counter block, so
// (seed, stream) pairs give statistically independent, reproducible
// sequences on any platform. Every Monte Carlo report records its seed.

namespace freebond {

class Philox4x32 {
 public:
  explicit Philox4x32(std::uint64_t seed, std::uint64_t stream = 0)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  std::uint64_t next_u64() {
    if (have_ == 0) refill();
    --have_;
    return buf_[have_];
  }

  /// Uniform on the open interval (0,1).
  double uniform01() {
    const std::uint64_t r = next_u64() >> 11;  // 53 bits
    return (static_cast<double>(r) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform01()); }

  /// Standard normal via Box-Muller; the spare is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.28318530717958647692 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Raw block output, for known-answer tests.
  static void block(std::uint32_t ctr[4], const std::uint32_t key_in[2],
                    std::uint32_t out[4]) {
    std::uint32_t k0 = key_in[0], k1 = key_in[1];
    std::uint32_t x0 = ctr[0], x1 = ctr[1], x2 = ctr[2], x3 = ctr[3];
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ull * x0;
      const std::uint64_t p1 = 0xCD9E8D57ull * x2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      const std::uint32_t y0 = hi1 ^ x1 ^ k0;
      const std::uint32_t y1 = lo1;
      const std::uint32_t y2 = hi0 ^ x3 ^ k1;
      const std::uint32_t y3 = lo0;
      x0 = y0;
      x1 = y1;
      x2 = y2;
      x3 = y3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out[0] = x0;
    out[1] = x1;
    out[2] = x2;
    out[3] = x3;
  }

 private:
  void refill() {
    std::uint32_t ctr[4] = {static_cast<std::uint32_t>(counter_),
                            static_cast<std::uint32_t>(counter_ >> 32),
                            stream_lo_, stream_hi_};
    const std::uint32_t key[2] = {key0_, key1_};
    std::uint32_t out[4];
    block(ctr, key, out);
    buf_[0] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    buf_[1] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    have_ = 2;
    ++counter_;
  }

  std::uint32_t key0_, key1_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t counter_ = 0;
  std::uint64_t buf_[2] = {0, 0};
  int have_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline constexpr std::uint64_t kDefaultSeed = 0x5EEDF00Dull;

}  // namespace freebond
