#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "aps/error.hpp"

namespace aps {

inline constexpr double kLn2 = std::numbers::ln2;

// log(sigmoid(x)) without overflow or catastrophic cancellation.  The branch
// keeps the argument of exp() nonpositive, so the result is finite for every
// finite x (including |x| ~ 700 where exp(x) itself would overflow).
inline double log_sigmoid(double x) {
  APS_CHECK(std::isfinite(x), "log_sigmoid: non-finite input");
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  APS_CHECK(std::isfinite(x), "sigmoid: non-finite input");
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Inverse of sigmoid on the open interval (0, 1).
inline double logit(double p) {
  APS_CHECK(p > 0.0 && p < 1.0, "logit: p must lie in (0, 1), got " + std::to_string(p));
  return std::log(p / (1.0 - p));
}

// Shannon entropy of a Bernoulli(p) variable in nats.
inline double binary_entropy(double p) {
  APS_CHECK(p > 0.0 && p < 1.0,
            "binary_entropy: p must lie in (0, 1), got " + std::to_string(p));
  return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

}  // namespace aps
