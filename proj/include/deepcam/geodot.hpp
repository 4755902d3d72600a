#pragma once

// Approximate geometric dot-product kernels.
//
//   x.y = |x| |y| cos(theta),   theta ~= (pi / k) * HD(sign(xC), sign(yC))
//
// Vector arguments are any Eigen dense expression; accumulation is always
// done in double regardless of the input scalar.

#include <cmath>
#include <cstddef>
#include <numbers>

#include <Eigen/Dense>

#include "deepcam/error.hpp"
#include "deepcam/hash_bits.hpp"
#include "deepcam/minifloat.hpp"
#include "deepcam/projection.hpp"

namespace deepcam {

/// Magnitude + sign hash of one vector.
struct Context {
  Minifloat8 norm;
  HashBits hash;

  friend bool operator==(const Context&, const Context&) = default;
};

enum class CosineMode {
  kPiecewise,  ///< piecewise-linear hardware approximation
  kExact,      ///< std::cos, for comparison only
};

template <typename DerivedX, typename DerivedY>
double algebraic_dot(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  if (x.size() != y.size())
    throw DimensionError("algebraic_dot: length " + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    acc += static_cast<double>(x.derived().coeff(i)) * static_cast<double>(y.derived().coeff(i));
  return acc;
}

template <typename Derived>
double l2_norm(const Eigen::MatrixBase<Derived>& x) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = static_cast<double>(x.derived().coeff(i));
    acc += v * v;
  }
  return std::sqrt(acc);
}

/// Bit j is 1 iff (xC)_j >= 0, so an exact zero projection hashes to 1.
template <typename Derived>
HashBits sign_hash(const Eigen::MatrixBase<Derived>& x, const ProjectionMatrix& c) {
  if (x.size() != c.n())
    throw DimensionError("sign_hash: vector length " + std::to_string(x.size()) +
                         " vs projection rows " + std::to_string(c.n()));
  const Eigen::VectorXd xd = x.derived().template cast<double>().reshaped();
  const Eigen::VectorXd proj = c.entries().transpose() * xd;
  HashBits bits(static_cast<std::size_t>(c.k()));
  for (Eigen::Index j = 0; j < proj.size(); ++j) bits.set(static_cast<std::size_t>(j), proj[j] >= 0.0);
  return bits;
}

std::size_t hamming_distance(const HashBits& a, const HashBits& b);

/// pi * hd / k, in [0, pi].
double estimate_angle(std::size_t hd, std::size_t k);

/// Piecewise approximation of cos on [0, pi]:
///   1 - theta/pi            for 0 <= theta <= pi/3
///   -0.96 theta + 1.51      for pi/3 < theta <= pi/2
///   -approx_cosine(pi - theta) beyond pi/2
/// The function jumps at pi/3 (0.6667 -> ~0.5047) and is not clamped.
double approx_cosine(double theta);

template <typename Derived>
Context build_context(const Eigen::MatrixBase<Derived>& x, const ProjectionMatrix& c) {
  HashBits hash = sign_hash(x, c);
  return Context{Minifloat8::encode(l2_norm(x)), std::move(hash)};
}

/// Dot-product estimate from two stored norms and a measured hamming
/// distance. Shared by every caller so that any schedule yields identical bits.
double geometric_dot(Minifloat8 norm_a, Minifloat8 norm_b, std::size_t hd, std::size_t k,
                     CosineMode mode = CosineMode::kPiecewise);

double approx_dot(const Context& cx, const Context& cy, CosineMode mode = CosineMode::kPiecewise);

}  // namespace deepcam
