#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "deepcam/geodot.hpp"

using namespace deepcam;
using std::numbers::pi;

TEST_SUITE("hash_bits") {
  TEST_CASE("string round trip and padding") {
    const auto h = HashBits::from_string("1011001");
    CHECK(h.size() == 7);
    CHECK(h.test(0));
    CHECK_FALSE(h.test(1));
    CHECK(h.to_string() == "1011001");
    CHECK((~h).to_string() == "0100110");
    CHECK(((~h).words()[0] >> 7) == 0);
    CHECK(h.prefix(3).to_string() == "101");
    CHECK_THROWS(HashBits::from_string("10x"));
  }

  TEST_CASE("hamming distance examples") {
    const auto a = HashBits::from_string("1010"), b = HashBits::from_string("1001");
    CHECK(hamming_distance(a, b) == 2);
    CHECK(hamming_distance(a, a) == 0);
    CHECK(hamming_distance(a, ~a) == 4);
    CHECK_THROWS_AS(hamming_distance(a, HashBits::from_string("10")), DimensionError);
  }

  TEST_CASE("symmetry and triangle inequality on random triples") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
      const std::size_t k = 1 + rng() % 300;
      HashBits a(k), b(k), c(k);
      for (std::size_t i = 0; i < k; ++i) {
        a.set(i, rng() & 1);
        b.set(i, rng() & 1);
        c.set(i, rng() & 1);
      }
      std::size_t naive = 0;
      for (std::size_t i = 0; i < k; ++i) naive += a.test(i) != b.test(i);
      CHECK(hamming_distance(a, b) == naive);
      CHECK(hamming_distance(a, b) == hamming_distance(b, a));
      CHECK(hamming_distance(a, c) <= hamming_distance(a, b) + hamming_distance(b, c));
    }
  }
}

TEST_SUITE("projection") {
  TEST_CASE("entries are a pure function of seed, index and n") {
    const ProjectionMatrix big(42, 25, 1024), small(42, 25, 256);
    CHECK(small.entries() == big.entries().leftCols(256));
    CHECK(ProjectionMatrix(42, 25, 256).entries() == small.entries());
    CHECK(ProjectionMatrix(43, 25, 256).entries() != small.entries());
    CHECK(big.entries()(3, 700) == counter_normal(42, 700 * 25 + 3));
  }

  TEST_CASE("entries look standard normal") {
    const ProjectionMatrix c(7, 100, 1000);
    const double mean = c.entries().mean();
    const double var = (c.entries().array() - mean).square().mean();
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
  }
}

TEST_SUITE("geodot") {
  TEST_CASE("algebraic dot and norm") {
    const Eigen::Vector4d x(0.6012, 0.8383, 0.6859, 0.5712), y(0.9044, 0.5352, 0.8110, 0.9243);
    CHECK(std::abs(algebraic_dot(x, y) - 2.0765) <= 0.001);
    CHECK(algebraic_dot(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == 0.0);
    CHECK(algebraic_dot(Eigen::Vector2d(3, 4), Eigen::Vector2d(3, 4)) == 25.0);
    CHECK_THROWS_AS(algebraic_dot(Eigen::Vector2d(1, 0), Eigen::Vector3d(1, 0, 0)), DimensionError);
    CHECK(l2_norm(Eigen::Vector2d(3, 4)) == 5.0);
    CHECK(l2_norm(Eigen::Vector3d::Zero()) == 0.0);
    CHECK(std::abs(l2_norm(x) - 1.3642) <= 0.0005);
  }

  TEST_CASE("sign hash conventions") {
    const ProjectionMatrix identity(Eigen::MatrixXd::Identity(2, 2));
    CHECK(sign_hash(Eigen::Vector2d(1, 0), identity).to_string() == "11");
    const ProjectionMatrix ones(Eigen::MatrixXd::Ones(2, 4));
    CHECK(sign_hash(Eigen::Vector2d(-1, -1), ones).to_string() == "0000");
    CHECK_THROWS_AS(sign_hash(Eigen::Vector3d(1, 1, 1), ones), DimensionError);
  }

  TEST_CASE("positive scale invariance and float/double agreement") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    const ProjectionMatrix c(9, 30, 512);
    for (int t = 0; t < 50; ++t) {
      Eigen::VectorXd x(30);
      for (auto& v : x) v = n(rng);
      const double alpha = std::ldexp(1.0, static_cast<int>(rng() % 20) - 10);
      CHECK(sign_hash(x, c) == sign_hash((alpha * x).eval(), c));
      const Eigen::VectorXf xf = x.cast<float>();
      CHECK(sign_hash(xf, c) == sign_hash(xf.cast<double>().eval(), c));
    }
  }

  TEST_CASE("angle estimate") {
    CHECK(estimate_angle(0, 256) == 0.0);
    CHECK(estimate_angle(128, 256) == doctest::Approx(pi / 2));
    CHECK(estimate_angle(256, 256) == doctest::Approx(pi));
    CHECK_THROWS_AS(estimate_angle(257, 256), ConfigError);
    CHECK_THROWS_AS(estimate_angle(0, 0), ConfigError);
  }

  TEST_CASE("piecewise cosine values") {
    CHECK(approx_cosine(0) == 1.0);
    CHECK(approx_cosine(pi / 6) == doctest::Approx(1.0 - 1.0 / 6));
    CHECK(approx_cosine(pi / 2) == doctest::Approx(-0.96 * pi / 2 + 1.51));
    CHECK(approx_cosine(2 * pi / 3) == doctest::Approx(-(1.0 - 1.0 / 3)));
    CHECK(approx_cosine(pi) == -1.0);
    CHECK_THROWS_AS(approx_cosine(-0.1), ConfigError);
    CHECK_THROWS_AS(approx_cosine(pi + 0.1), ConfigError);
  }

  TEST_CASE("piecewise cosine antisymmetry and bound") {
    double worst = 0;
    for (int i = 0; i <= 20000; ++i) {
      const double t = pi * i / 20000;
      worst = std::max(worst, std::abs(approx_cosine(t) - std::cos(t)));
      if (t < pi / 2) CHECK(std::abs(approx_cosine(pi - t) + approx_cosine(t)) <= 1e-12);
    }
    CHECK(worst <= 0.17);
    CHECK(worst > 0.16);  // attained next to pi/3 on the linear branch
  }

  TEST_CASE("contexts and approximate dot") {
    const ProjectionMatrix c(1, 2, 256);
    const Context five = build_context(Eigen::Vector2d(3, 4), c);
    CHECK(five.norm.decode() == 5.0);
    CHECK(approx_dot(five, five) == 25.0);
    const Context zero = build_context(Eigen::Vector2d::Zero(), c);
    CHECK(zero.norm.decode() == 0.0);
    CHECK(zero.hash == ~HashBits(256));
    CHECK(approx_dot(zero, five) == 0.0);
    CHECK(build_context(Eigen::Vector2d(6, 8), c).hash == five.hash);
    CHECK(approx_dot(five, build_context(Eigen::Vector2d(-3, -4), c)) == -25.0);
    CHECK(std::abs(geometric_dot(Minifloat8::encode(2), Minifloat8::encode(3), 128, 256, CosineMode::kExact)) <
          1e-12);
  }

  TEST_CASE("contexts are deterministic") {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(50, -1, 2);
    CHECK(build_context(x, ProjectionMatrix(3, 50, 1024)) == build_context(x, ProjectionMatrix(3, 50, 1024)));
  }
}
