#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace memsfde {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A (key, counter) pair maps to four 32-bit words with no internal state, so
/// any replicate's stream can be regenerated independently of the others.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr const char* name() { return "philox4x32-10"; }

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

/// Standard normal variates for one (seed, stream) pair: Philox blocks
/// turned into pairs of normals by Box-Muller.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto w = Philox4x32::generate({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                         stream_lo_, stream_hi_},
                                        key_);
    ++block_;
    const double u1 = to_open_unit(w[0], w[1]);
    const double u2 = to_open_unit(w[2], w[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  void fill(std::span<double> out, double scale = 1.0) {
    for (double& x : out) x = scale * next();
  }

  /// 52-bit uniform in the open interval (0, 1). With 53 bits the top
  /// midpoint 1 - 2^-54 would round to exactly 1.
  static double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
  }

 private:
  Philox4x32::Key key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint64_t block_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// i.i.d. N(0, dt) increments, reproducible from (seed, stream).
inline std::vector<double> brownian_increments(std::uint64_t seed, std::uint64_t stream, std::size_t count, double dt) {
  std::vector<double> out(count);
  NormalStream(seed, stream).fill(out, std::sqrt(dt));
  return out;
}

}  // namespace memsfde
