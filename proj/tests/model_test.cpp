#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "doctest.h"

#include "aps/model.hpp"

using namespace aps;

namespace {

Segment random_segment(std::mt19937_64& rng, int length, int dim) {
  std::normal_distribution<double> draw(0.0, 1.0);
  Segment seg;
  seg.length = length;
  seg.x.resize(static_cast<std::size_t>(length) * dim);
  for (double& v : seg.x) v = draw(rng);
  return seg;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("discounted segment reward matches the geometric series") {
  ModelConfig cfg;
  cfg.arch = ModelArch::Linear;
  cfg.input_dim = 1;
  RewardModel model = RewardModel::zeros(cfg);
  model.params()[0] = 1.0;  // weight; bias stays 0
  Segment seg;
  seg.length = 25;
  seg.x.assign(25, 1.0);
  // sum_{t<25} 0.99^t
  CHECK(std::abs(model.segment_reward(seg, 0.99) - 22.217864060085322799) < 1e-12);
  CHECK(model.segment_reward(seg, 1.0) == 25.0);
  CHECK(model.segment_reward(seg, 0.0) == 1.0);
}

TEST_CASE("seeded construction is deterministic, zeros() is zero") {
  ModelConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden = 8;
  const RewardModel a(cfg, 99);
  const RewardModel b(cfg, 99);
  CHECK(a.params() == b.params());
  const RewardModel c(cfg, 100);
  CHECK(a.params() != c.params());
  const RewardModel z = RewardModel::zeros(cfg);
  for (double p : z.params()) CHECK(p == 0.0);
  CHECK(a.params().size() == cfg.param_count());
}

TEST_CASE("pair_delta is antisymmetric and bias-invariant") {
  std::mt19937_64 rng(5);
  for (ModelArch arch : {ModelArch::Linear, ModelArch::Mlp2}) {
    ModelConfig cfg;
    cfg.arch = arch;
    cfg.input_dim = 4;
    cfg.hidden = 6;
    RewardModel model(cfg, 17);
    const Segment w = random_segment(rng, 3, 4);
    const Segment l = random_segment(rng, 3, 4);
    const double d = model.pair_delta(w, l, 0.9);
    CHECK(model.pair_delta(l, w, 0.9) == -d);
    // Shifting the head bias moves both rewards identically; same-length
    // segments cancel the shift in the difference.
    RewardModel shifted = model;
    shifted.params().back() += 3.25;
    CHECK(std::abs(shifted.pair_delta(w, l, 0.9) - d) < 1e-12 * (1.0 + std::abs(d)));
  }
}

TEST_CASE("linear reward difference is homogeneous in the weights") {
  ModelConfig cfg;
  cfg.arch = ModelArch::Linear;
  cfg.input_dim = 5;
  std::mt19937_64 rng(6);
  RewardModel model(cfg, 8);
  RewardModel doubled = model;
  for (double& p : doubled.params()) p *= 2.0;
  const Segment w = random_segment(rng, 2, 5);
  const Segment l = random_segment(rng, 2, 5);
  CHECK(doubled.pair_delta(w, l, 1.0) == 2.0 * model.pair_delta(w, l, 1.0));
}

TEST_CASE("accumulate_pair_grad matches central differences on every parameter") {
  std::mt19937_64 rng(7);
  for (ModelArch arch : {ModelArch::Linear, ModelArch::Mlp2}) {
    ModelConfig cfg;
    cfg.arch = arch;
    cfg.input_dim = 3;
    cfg.hidden = 4;
    RewardModel model(cfg, 31);
    const Segment w = random_segment(rng, 2, 3);
    const Segment l = random_segment(rng, 2, 3);
    const double upstream = 1.3;
    std::vector<double> grad(cfg.param_count(), 0.0);
    model.accumulate_pair_grad(w, l, 0.95, upstream, grad);
    const double h = 1e-6;
    for (std::size_t i = 0; i < cfg.param_count(); ++i) {
      RewardModel probe = model;
      probe.params()[i] += h;
      const double up = probe.pair_delta(w, l, 0.95);
      probe.params()[i] -= 2.0 * h;
      const double dn = probe.pair_delta(w, l, 0.95);
      const double fd = upstream * (up - dn) / (2.0 * h);
      CHECK(std::abs(fd - grad[i]) <= 1e-5 * (1.0 + std::abs(grad[i])));
    }
  }
}

TEST_CASE("gradients accumulate instead of overwriting") {
  ModelConfig cfg;
  cfg.arch = ModelArch::Linear;
  cfg.input_dim = 3;
  std::mt19937_64 rng(9);
  RewardModel model(cfg, 1);
  const Segment w = random_segment(rng, 1, 3);
  const Segment l = random_segment(rng, 1, 3);
  std::vector<double> once(cfg.param_count(), 0.0);
  model.accumulate_pair_grad(w, l, 1.0, 1.0, once);
  std::vector<double> twice(cfg.param_count(), 0.0);
  model.accumulate_pair_grad(w, l, 1.0, 1.0, twice);
  model.accumulate_pair_grad(w, l, 1.0, 1.0, twice);
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(twice[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-15));
  }
}

TEST_CASE("checkpoints round trip bit-exactly") {
  ModelConfig cfg;
  cfg.input_dim = 7;
  cfg.hidden = 5;
  const RewardModel model(cfg, 123);
  const std::string path = temp_path("aps_model_roundtrip.json");
  save_checkpoint(path, model);
  const RewardModel back = load_checkpoint(path);
  CHECK(back.params() == model.params());
  CHECK(back.config().arch == cfg.arch);
  CHECK(back.config().input_dim == cfg.input_dim);
  CHECK(back.config().hidden == cfg.hidden);
  std::filesystem::remove(path);
}

TEST_CASE("malformed checkpoints are rejected") {
  const std::string path = temp_path("aps_model_bad.json");
  {
    std::ofstream f(path);
    f << "{\"format\": \"something-else\", \"version\": 1}";
  }
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  CHECK_THROWS_AS(load_checkpoint(temp_path("aps_no_such_file.json")),
                  std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("segment and config validation") {
  ModelConfig cfg;
  cfg.input_dim = 0;
  CHECK_THROWS_WITH_AS(cfg.validate(), "ModelConfig: input_dim must be > 0",
                       std::invalid_argument);
  cfg.input_dim = 3;
  RewardModel model(cfg, 0);
  Segment bad;
  bad.length = 0;
  CHECK_THROWS_AS(model.segment_reward(bad, 1.0), std::invalid_argument);
  std::vector<double> small(2, 0.0);
  Segment ok;
  ok.length = 1;
  ok.x.assign(3, 0.0);
  CHECK_THROWS_AS(model.accumulate_pair_grad(ok, ok, 1.0, 1.0, small),
                  std::invalid_argument);
}
