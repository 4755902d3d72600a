#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace deepcam {

/// Seeded n x k Gaussian matrix used for sign-random-projection hashing.
///
/// Entry (i, j) is a pure function of (seed, i, j, n): it is drawn from a
/// counter-based generator (SplitMix64 finalizer over
/// seed + golden * (2 * (j * n + i) + t), t in {0, 1}) followed by one
/// Box-Muller transform. Columns are generated independently of k, so the
/// matrix for k = 256 is exactly the first 256 columns of the one for
/// k = 1024. That lets a hash of length k' < k be read as a prefix.
class ProjectionMatrix {
 public:
  ProjectionMatrix(std::uint64_t seed, Eigen::Index n, Eigen::Index k);

  /// Wraps explicit entries (test doubles, non-Gaussian matrices).
  explicit ProjectionMatrix(Eigen::MatrixXd entries);

  std::uint64_t seed() const noexcept { return seed_; }
  Eigen::Index n() const noexcept { return entries_.rows(); }
  Eigen::Index k() const noexcept { return entries_.cols(); }
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }

 private:
  std::uint64_t seed_ = 0;
  Eigen::MatrixXd entries_;
};

/// SplitMix64 output for a given state.
std::uint64_t splitmix64(std::uint64_t state) noexcept;

/// Standard normal variate for counter `index` under `seed`.
double counter_normal(std::uint64_t seed, std::uint64_t index) noexcept;

}  // namespace deepcam
