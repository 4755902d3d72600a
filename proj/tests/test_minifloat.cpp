#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "deepcam/error.hpp"
#include "deepcam/minifloat.hpp"

using deepcam::Minifloat8;

namespace {

// Bit-level reference: sign | eeee | mmm, bias 7, exponent 0 is subnormal.
double oracle_decode(unsigned raw) {
  const int s = (raw >> 7) & 1, e = (raw >> 3) & 0xF, m = raw & 7;
  const double mag = e == 0 ? std::ldexp(m / 8.0, -6) : std::ldexp(1.0 + m / 8.0, e - 7);
  return s ? -mag : mag;
}

// Nearest representable magnitude by exhaustive search, ties to the even code.
unsigned oracle_encode_magnitude(double v) {
  unsigned best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (unsigned raw = 0; raw < 128; ++raw) {
    const double err = std::abs(oracle_decode(raw) - v);
    if (err < best_err || (err == best_err && (raw & 1) == 0)) {
      best = raw;
      best_err = err;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("every code decodes as the bit-level reference") {
  for (unsigned raw = 0; raw < 256; ++raw)
    CHECK(Minifloat8::from_raw(static_cast<std::uint8_t>(raw)).decode() == oracle_decode(raw));
}

TEST_CASE("every code re-encodes to itself") {
  for (unsigned raw = 0; raw < 256; ++raw) {
    if (raw == 0x80) continue;  // -0 folds into +0
    const double v = oracle_decode(raw);
    CHECK(Minifloat8::encode(v).raw() == raw);
  }
  CHECK(Minifloat8::encode(-0.0).decode() == 0.0);
}

TEST_CASE("rounding matches exhaustive nearest search") {
  std::vector<double> probes;
  for (unsigned raw = 0; raw < 127; ++raw) {
    const double a = oracle_decode(raw), b = oracle_decode(raw + 1);
    probes.insert(probes.end(), {a, (a + b) / 2, std::nextafter((a + b) / 2, 0.0),
                                 std::nextafter((a + b) / 2, 1e9), a + (b - a) * 0.3});
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 480);
  for (int i = 0; i < 2000; ++i) probes.push_back(u(rng));
  for (double v : probes) {
    INFO("v = " << v);
    CHECK(Minifloat8::encode(v).raw() == oracle_encode_magnitude(v));
    CHECK(Minifloat8::encode(-v).decode() == -Minifloat8::encode(v).decode());
  }
}

TEST_CASE("range and saturation") {
  CHECK(Minifloat8::kMaxFinite == oracle_decode(0x7F));
  CHECK(Minifloat8::kMinSubnormal == oracle_decode(0x01));
  CHECK(Minifloat8::encode(1e6).decode() == 480.0);
  CHECK(Minifloat8::encode(-1e6).decode() == -480.0);
  CHECK(Minifloat8::encode(std::numeric_limits<double>::infinity()).decode() == 480.0);
  CHECK(Minifloat8::encode(1e-9).decode() == 0.0);
  CHECK(Minifloat8::encode(5.0).decode() == 5.0);
  CHECK_THROWS_AS(Minifloat8::encode(std::nan("")), deepcam::ConfigError);
}
