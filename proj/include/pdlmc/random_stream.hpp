#pragma once

// Counter-based normal/uniform draws. Every draw is a pure function of
// (seed, domain, index, block), so chains never carry hidden generator state
// and two samplers that consume the same indices see the same noise.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace pdlmc {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter apply(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static constexpr Counter single_round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Separates independent uses of one seed.
enum class StreamDomain : std::uint32_t {
  kLangevinNoise = 0x4c4d4331u,
  kRejection = 0x52454a31u,
  kSynthesis = 0x53594e31u,
};

class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed,
                        StreamDomain domain = StreamDomain::kLangevinNoise) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        domain_(static_cast<std::uint32_t>(domain)) {}

  std::uint64_t seed() const noexcept {
    return (std::uint64_t{key_[1]} << 32) | key_[0];
  }

  /// Fills `out` with iid N(0,1) draws for draw number `index`.
  void normals(std::uint64_t index, std::span<double> out) const noexcept {
    for (std::size_t i = 0; i < out.size(); i += 2) {
      const auto [u1, u2] = uniform_pair(index, static_cast<std::uint32_t>(i / 2));
      const double radius = std::sqrt(-2.0 * std::log(u1));
      const double angle = 2.0 * std::numbers::pi * u2;
      out[i] = radius * std::cos(angle);
      if (i + 1 < out.size()) out[i + 1] = radius * std::sin(angle);
    }
  }

  /// Two doubles in the open interval (0, 1).
  std::array<double, 2> uniform_pair(std::uint64_t index, std::uint32_t block) const noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(index),
                                  static_cast<std::uint32_t>(index >> 32), block, domain_};
    const auto r = Philox4x32::apply(ctr, key_);
    const std::uint64_t a = (std::uint64_t{r[0]} << 32) | r[1];
    const std::uint64_t b = (std::uint64_t{r[2]} << 32) | r[3];
    return {to_open_unit(a), to_open_unit(b)};
  }

 private:
  static double to_open_unit(std::uint64_t bits) noexcept {
    // 53 random mantissa bits, shifted by half an ulp so 0 is never produced.
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
  std::uint32_t domain_;
};

}  // namespace pdlmc
