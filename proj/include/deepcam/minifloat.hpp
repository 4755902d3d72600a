#pragma once

#include <cstdint>

namespace deepcam {

/// 8-bit minifloat, E4M3 layout: 1 sign bit, 4 exponent bits (bias 7),
/// 3 mantissa bits. Exponent field 0 encodes subnormals. There are no
/// infinities or NaNs, so every code is finite and the largest magnitude is
/// 480. Encoding rounds to nearest, ties to even, and saturates.
class Minifloat8 {
 public:
  static constexpr int kExponentBias = 7;
  static constexpr int kMantissaBits = 3;
  static constexpr double kMaxFinite = 480.0;
  static constexpr double kMinSubnormal = 1.0 / 512.0;

  constexpr Minifloat8() = default;

  static constexpr Minifloat8 from_raw(std::uint8_t raw) noexcept {
    Minifloat8 m;
    m.raw_ = raw;
    return m;
  }

  /// Throws ConfigError on NaN. +-inf saturate.
  static Minifloat8 encode(double value);

  double decode() const noexcept;

  constexpr std::uint8_t raw() const noexcept { return raw_; }

  friend constexpr bool operator==(Minifloat8, Minifloat8) = default;

 private:
  std::uint8_t raw_ = 0;
};

}  // namespace deepcam
