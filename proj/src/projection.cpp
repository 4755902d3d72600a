#include "deepcam/projection.hpp"

#include <cmath>
#include <numbers>

#include "deepcam/error.hpp"

namespace deepcam {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// 53-bit uniform in (0, 1], safe for log().
double unit_open_closed(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}
}  // namespace

std::uint64_t splitmix64(std::uint64_t state) noexcept {
  std::uint64_t z = state + kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double counter_normal(std::uint64_t seed, std::uint64_t index) noexcept {
  const double u1 = unit_open_closed(splitmix64(seed + kGolden * (2 * index)));
  const double u2 = unit_open_closed(splitmix64(seed + kGolden * (2 * index + 1)));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

ProjectionMatrix::ProjectionMatrix(std::uint64_t seed, Eigen::Index n, Eigen::Index k)
    : seed_(seed) {
  if (n < 1 || k < 1) throw DimensionError("ProjectionMatrix: n and k must be >= 1");
  entries_.resize(n, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      entries_(i, j) = counter_normal(seed, static_cast<std::uint64_t>(j * n + i));
}

ProjectionMatrix::ProjectionMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() < 1 || entries_.cols() < 1)
    throw DimensionError("ProjectionMatrix: empty entries");
}

}  // namespace deepcam
