#include "deepcam/minifloat.hpp"

#include <cmath>

#include "deepcam/error.hpp"

namespace deepcam {

Minifloat8 Minifloat8::encode(double value) {
  if (std::isnan(value)) throw ConfigError("Minifloat8::encode: NaN");
  const std::uint8_t sign = std::signbit(value) ? 0x80 : 0x00;
  const double mag = std::fabs(value);
  if (mag >= kMaxFinite) return from_raw(sign | 0x7F);

  // Quantum of the binade containing mag (subnormal binade shares the
  // quantum of the smallest normal binade).
  int exp2 = 0;
  (void)std::frexp(mag, &exp2);  // mag = f * 2^exp2, f in [0.5, 1)
  int unbiased = exp2 - 1;
  constexpr int kMinNormal = 1 - kExponentBias;
  if (mag == 0.0 || unbiased < kMinNormal) unbiased = kMinNormal;
  const double quantum = std::ldexp(1.0, unbiased - kMantissaBits);

  // Integer multiple of the quantum, rounded half to even.
  const double steps = std::nearbyint(mag / quantum);  // default FE_TONEAREST
  double rounded = steps * quantum;
  if (rounded >= kMaxFinite) return from_raw(sign | 0x7F);

  if (rounded == 0.0) return from_raw(sign);
  int e = 0;
  (void)std::frexp(rounded, &e);
  int ub = e - 1;
  if (ub < kMinNormal) {
    // subnormal: exponent field 0, mantissa = rounded / 2^(minNormal - 3)
    const auto mant = static_cast<std::uint8_t>(std::ldexp(rounded, kMantissaBits - kMinNormal));
    return from_raw(sign | mant);
  }
  const auto field = static_cast<std::uint8_t>(ub + kExponentBias);
  const double frac = std::ldexp(rounded, -ub) - 1.0;  // in [0, 1)
  const auto mant = static_cast<std::uint8_t>(std::ldexp(frac, kMantissaBits));
  return from_raw(static_cast<std::uint8_t>(sign | (field << kMantissaBits) | mant));
}

double Minifloat8::decode() const noexcept {
  const bool negative = raw_ & 0x80;
  const int field = (raw_ >> kMantissaBits) & 0x0F;
  const int mant = raw_ & 0x07;
  double mag = 0.0;
  if (field == 0)
    mag = std::ldexp(static_cast<double>(mant), 1 - kExponentBias - kMantissaBits);
  else
    mag = std::ldexp(1.0 + mant / 8.0, field - kExponentBias);
  return negative ? -mag : mag;
}

}  // namespace deepcam
