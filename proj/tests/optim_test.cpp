#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "aps/optim.hpp"

using namespace aps;

TEST_CASE("sgd step is exactly p -= lr * g") {
  OptConfig cfg;
  cfg.kind = OptKind::Sgd;
  cfg.lr = 0.25;
  Optimizer opt(cfg, 3);
  std::vector<double> p = {1.0, -2.0, 0.5};
  const std::vector<double> g = {4.0, 0.0, -2.0};
  opt.step(p, g);
  CHECK(p[0] == 1.0 - 0.25 * 4.0);
  CHECK(p[1] == -2.0);
  CHECK(p[2] == 0.5 + 0.25 * 2.0);
  CHECK(opt.steps_taken() == 1);
}

TEST_CASE("adam follows the bias-corrected moment recursion") {
  OptConfig cfg;  // adam lr 1e-3 beta1 .9 beta2 .999 eps 1e-8
  Optimizer opt(cfg, 2);
  std::vector<double> p = {0.3, -0.7};
  const std::vector<double> g1 = {1.5, -0.25};
  const std::vector<double> g2 = {-0.5, 0.75};

  // Shadow implementation straight from the definition.
  std::vector<double> m(2, 0.0), v(2, 0.0), q = p;
  auto shadow_step = [&](const std::vector<double>& g, int t) {
    for (int i = 0; i < 2; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / (1.0 - std::pow(cfg.beta1, t));
      const double vhat = v[i] / (1.0 - std::pow(cfg.beta2, t));
      q[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  };
  opt.step(p, g1);
  shadow_step(g1, 1);
  opt.step(p, g2);
  shadow_step(g2, 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-14));
  }
  CHECK(opt.steps_taken() == 2);
}

TEST_CASE("optimizer rejects bad inputs") {
  OptConfig cfg;
  cfg.lr = 0.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), "OptConfig: lr must be > 0",
                       std::invalid_argument);
  Optimizer opt(OptConfig{}, 2);
  std::vector<double> p = {1.0, 2.0};
  const std::vector<double> short_g = {1.0};
  CHECK_THROWS_WITH_AS(opt.step(p, short_g), "Optimizer::step: size mismatch",
                       std::invalid_argument);
  const std::vector<double> bad_g = {1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_WITH_AS(opt.step(p, bad_g), "Optimizer::step: non-finite gradient",
                       std::runtime_error);
}

TEST_CASE("optimizer kind names round trip") {
  CHECK(opt_kind_from_name("sgd") == OptKind::Sgd);
  CHECK(opt_kind_from_name("adam") == OptKind::Adam);
  CHECK_THROWS_AS(opt_kind_from_name("rmsprop"), std::invalid_argument);
}
