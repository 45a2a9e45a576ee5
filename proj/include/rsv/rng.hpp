#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rsv {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// The 64-bit seed is the key; `stream` occupies the upper half of the
/// 128-bit counter so independent chains get non-overlapping sequences.
/// Satisfies UniformRandomBitGenerator with 64-bit output.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using counter_type = std::array<std::uint32_t, 4>;
  using key_type = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (buffered_ == 0) {
      block_ = bijection(counter_, key_);
      increment();
      buffered_ = 2;
    }
    const std::size_t i = 2 - buffered_;
    --buffered_;
    return (static_cast<std::uint64_t>(block_[2 * i + 1]) << 32) | block_[2 * i];
  }

  /// The raw 10-round bijection; exposed for known-answer tests.
  static counter_type bijection(counter_type ctr, key_type key) {
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
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  void increment() {
    if (++counter_[0] == 0) ++counter_[1];
  }

  key_type key_;
  counter_type counter_;
  counter_type block_{};
  std::size_t buffered_ = 0;
};

using Rng = Philox4x32;

/// Uniform on the open interval (0, 1) with 53 bits of resolution.
template <class Gen>
double uniform01(Gen& gen) {
  return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
}

/// Box-Muller, cosine branch only: every normal consumes exactly two uniforms,
/// so the stream position after n draws is independent of caching state.
template <class Gen>
double standard_normal(Gen& gen) {
  const double u1 = uniform01(gen);
  const double u2 = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 uses the u^(1/a) boost.
template <class Gen>
double standard_gamma(Gen& gen, double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw std::domain_error("gamma shape must be positive");
  if (shape < 1.0) {
    const double boosted = standard_gamma(gen, shape + 1.0);
    return boosted * std::pow(uniform01(gen), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double z = standard_normal(gen);
    double v = 1.0 + c * z;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = uniform01(gen);
    if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v)) return d * v;
  }
}

/// Inverse-gamma with density proportional to x^(-shape-1) exp(-scale/x).
template <class Gen>
double inverse_gamma(Gen& gen, double shape, double scale) {
  if (!(scale > 0.0)) throw std::domain_error("inverse-gamma scale must be positive");
  return scale / standard_gamma(gen, shape);
}

}  // namespace rsv
