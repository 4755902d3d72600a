#include "deepcam/geodot.hpp"

namespace deepcam {

std::size_t hamming_distance(const HashBits& a, const HashBits& b) {
  if (a.size() != b.size())
    throw DimensionError("hamming_distance: length " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  return hamming_words(a.words(), b.words(), a.size());
}

double estimate_angle(std::size_t hd, std::size_t k) {
  if (k < 1) throw ConfigError("estimate_angle: k must be >= 1");
  if (hd > k)
    throw ConfigError("estimate_angle: hd " + std::to_string(hd) + " exceeds k " + std::to_string(k));
  return std::numbers::pi * static_cast<double>(hd) / static_cast<double>(k);
}

double approx_cosine(double theta) {
  constexpr double pi = std::numbers::pi;
  if (!(theta >= 0.0 && theta <= pi))
    throw ConfigError("approx_cosine: theta " + std::to_string(theta) + " outside [0, pi]");
  if (theta > pi / 2) {
    // Pick the branch on theta itself so pi - theta rounding cannot cross pi/3.
    const double r = pi - theta;
    return theta >= 2 * pi / 3 ? -(1.0 - r / pi) : -(-0.96 * r + 1.51);
  }
  if (theta <= pi / 3) return 1.0 - theta / pi;
  return -0.96 * theta + 1.51;
}

double geometric_dot(Minifloat8 norm_a, Minifloat8 norm_b, std::size_t hd, std::size_t k,
                     CosineMode mode) {
  const double theta = estimate_angle(hd, k);
  const double cosine = mode == CosineMode::kPiecewise ? approx_cosine(theta) : std::cos(theta);
  return norm_a.decode() * norm_b.decode() * cosine;
}

double approx_dot(const Context& cx, const Context& cy, CosineMode mode) {
  return geometric_dot(cx.norm, cy.norm, hamming_distance(cx.hash, cy.hash), cx.hash.size(), mode);
}

}  // namespace deepcam
