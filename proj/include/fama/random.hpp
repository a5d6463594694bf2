#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace fama {

/// Philox4x32-10 block function (Salmon et al., SC'11). Maps a 128-bit counter
/// and a 64-bit key to 128 pseudo-random bits; no internal state.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer, used to fold structured stream identifiers
/// (view, variable, draw, ...) into a single 64-bit stream id.
std::uint64_t mix64(std::uint64_t x) noexcept;

std::uint64_t derive_stream(std::initializer_list<std::uint64_t> ids) noexcept;

/// Sequential reader over one Philox stream: key = seed, counter high word =
/// stream id, counter low word = block index. Two streams with different ids
/// never share a block, so results do not depend on which thread reads them.
class RandomStream {
 public:
  using result_type = std::uint32_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return 0xFFFFFFFFu; }
  result_type operator()() noexcept;

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;
  double normal() noexcept;
  /// Gamma(shape, scale = 1).
  double gamma(double shape) noexcept;
  /// Inverse-gamma with shape a and scale b, density ∝ x^{-a-1} exp(-b/x).
  double inverse_gamma(double shape, double scale) noexcept { return scale / gamma(shape); }

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fama
