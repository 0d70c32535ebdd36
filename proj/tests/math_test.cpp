#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"

#include "aps/math.hpp"

using namespace aps;

TEST_CASE("log_sigmoid matches high-precision references") {
  CHECK(std::abs(log_sigmoid(0.0) - (-kLn2)) < 1e-16);
  CHECK(std::abs(log_sigmoid(2.0) - (-0.12692801104297249644)) < 1e-16);
  CHECK(std::abs(log_sigmoid(-2.0) - (-2.1269280110429724964)) < 1e-15);
}

TEST_CASE("log_sigmoid stays finite and monotone deep in both tails") {
  CHECK(std::isfinite(log_sigmoid(-745.0)));
  CHECK(std::abs(log_sigmoid(-745.0) - (-745.0)) < 1e-12);
  // Positive tail: tiny but strictly negative, no underflow to -inf or 0 loss
  // of sign.
  CHECK(log_sigmoid(40.0) < 0.0);
  CHECK(log_sigmoid(40.0) > -1e-17);
  double prev = log_sigmoid(-50.0);
  for (double x = -49.0; x <= 50.0; x += 1.0) {
    const double cur = log_sigmoid(x);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("sigmoid complement and logit round trip") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> draw(-30.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = draw(rng);
    const double s = sigmoid(x);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    CHECK(std::abs(s + sigmoid(-x) - 1.0) < 1e-15);
    // logit(sigmoid(x)) loses ~e^|x| ulps to rounding of s near saturation,
    // so only the moderate range is a fair round-trip check.
    if (std::abs(x) < 14.0) {
      CHECK(std::abs(logit(s) - x) < 1e-9 * (1.0 + std::abs(x)));
    }
  }
  // The reverse direction is well conditioned over the whole open interval.
  std::uniform_real_distribution<double> draw_p(1e-12, 1.0 - 1e-12);
  for (int i = 0; i < 1000; ++i) {
    const double p = draw_p(rng);
    CHECK(std::abs(sigmoid(logit(p)) - p) < 1e-12);
  }
}

TEST_CASE("binary_entropy values, symmetry, and maximum") {
  CHECK(std::abs(binary_entropy(0.6) - 0.673011667009256436) < 1e-15);
  CHECK(std::abs(binary_entropy(0.95) - 0.19851524334587256) < 1e-15);
  CHECK(std::abs(binary_entropy(0.5) - kLn2) < 1e-15);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> draw(0.01, 0.99);
  for (int i = 0; i < 200; ++i) {
    const double p = draw(rng);
    CHECK(std::abs(binary_entropy(p) - binary_entropy(1.0 - p)) < 1e-14);
    CHECK(binary_entropy(p) <= kLn2 + 1e-15);
  }
}

TEST_CASE("domain violations are rejected") {
  CHECK_THROWS_AS(logit(0.0), std::invalid_argument);
  CHECK_THROWS_AS(logit(1.0), std::invalid_argument);
  CHECK_THROWS_AS(logit(-0.5), std::invalid_argument);
  CHECK_THROWS_AS(binary_entropy(0.0), std::invalid_argument);
  CHECK_THROWS_AS(binary_entropy(1.5), std::invalid_argument);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(log_sigmoid(nan), std::invalid_argument);
  CHECK_THROWS_AS(log_sigmoid(inf), std::invalid_argument);
  CHECK_THROWS_AS(sigmoid(nan), std::invalid_argument);
}
