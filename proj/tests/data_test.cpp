#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "doctest.h"

#include "aps/data.hpp"

using namespace aps;

namespace {

DataConfig small_cfg() {
  DataConfig cfg;
  cfg.n_pairs = 100;
  cfg.input_dim = 5;
  cfg.segment_length = 2;
  cfg.gamma = 0.9;
  cfg.seed = 42;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string temp_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("generation is reproducible and split sizes honor the fraction") {
  const Dataset a = generate_dataset(small_cfg());
  const Dataset b = generate_dataset(small_cfg());
  CHECK(a.train.size() == 80);
  CHECK(a.test.size() == 20);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].strength == b.train[i].strength);
    CHECK(a.train[i].winner.x == b.train[i].winner.x);
  }
  CHECK(a.truth.params() == b.truth.params());
  DataConfig other = small_cfg();
  other.seed = 43;
  const Dataset c = generate_dataset(other);
  CHECK(a.train[0].winner.x != c.train[0].winner.x);
}

TEST_CASE("deterministic labels order every pair by true reward") {
  const Dataset ds = generate_dataset(small_cfg());
  for (const auto& split : {ds.train, ds.test}) {
    for (const PreferencePair& p : split) {
      CHECK(p.strength > 0.0);
      CHECK(std::isnan(p.p_star));
      const double recomputed = ds.truth.pair_delta(p.winner, p.loser, ds.cfg.gamma);
      CHECK(std::abs(recomputed - p.strength) <= 1e-12 * (1.0 + std::abs(p.strength)));
    }
  }
}

TEST_CASE("stochastic labels record the win probability of the stored orientation") {
  DataConfig cfg = small_cfg();
  cfg.mode = LabelMode::Stochastic;
  cfg.noise_scale = 2.0;
  cfg.n_pairs = 400;
  const Dataset ds = generate_dataset(cfg);
  int mislabeled = 0;
  for (const PreferencePair& p : ds.train) {
    CHECK(p.p_star > 0.0);
    CHECK(p.p_star < 1.0);
    const double d = ds.truth.pair_delta(p.winner, p.loser, cfg.gamma);
    CHECK(std::abs(d - p.strength) <= 1e-12 * (1.0 + std::abs(d)));
    // p_star must describe the stored orientation: above 1/2 iff the stored
    // winner really is better.
    CHECK((p.p_star > 0.5) == (p.strength > 0.0));
    mislabeled += p.strength < 0.0;
  }
  CHECK(mislabeled > 0);  // noise 2.0 flips a visible fraction
}

TEST_CASE("strength_bins makes equal-count monotone bins") {
  const Dataset ds = generate_dataset(small_cfg());
  const std::vector<int> bins = strength_bins(ds.train, 5);
  REQUIRE(bins.size() == ds.train.size());
  std::vector<int> count(5, 0);
  for (int b : bins) {
    REQUIRE(b >= 0);
    REQUIRE(b < 5);
    ++count[b];
  }
  for (int c : count) CHECK(c == 16);  // 80 train pairs into 5 bins
  // Higher strength never lands in a lower bin.
  for (std::size_t i = 0; i < bins.size(); ++i) {
    for (std::size_t j = 0; j < bins.size(); ++j) {
      if (ds.train[i].strength < ds.train[j].strength) {
        CHECK(bins[i] <= bins[j]);
      }
    }
  }
  CHECK_THROWS_AS(strength_bins(ds.train, 0), std::invalid_argument);
}

TEST_CASE("dataset files round trip bit-exactly and regenerate identically") {
  const Dataset ds = generate_dataset(small_cfg());
  const std::string dir1 = temp_dir("aps_data_rt1");
  const std::string dir2 = temp_dir("aps_data_rt2");
  save_dataset(dir1, ds);
  save_dataset(dir2, ds);
  CHECK(slurp(dir1 + "/train.jsonl") == slurp(dir2 + "/train.jsonl"));
  CHECK(slurp(dir1 + "/test.jsonl") == slurp(dir2 + "/test.jsonl"));

  const Dataset back = load_dataset(dir1);
  CHECK(back.truth.params() == ds.truth.params());
  REQUIRE(back.train.size() == ds.train.size());
  REQUIRE(back.test.size() == ds.test.size());
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    CHECK(back.train[i].strength == ds.train[i].strength);
    CHECK(back.train[i].winner.x == ds.train[i].winner.x);
    CHECK(back.train[i].loser.x == ds.train[i].loser.x);
  }
  CHECK(back.cfg.n_pairs == ds.cfg.n_pairs);
  CHECK(back.cfg.gamma == ds.cfg.gamma);
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("config validation rejects nonsense") {
  DataConfig cfg = small_cfg();
  cfg.n_pairs = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_cfg();
  cfg.test_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_cfg();
  cfg.gamma = -0.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(label_mode_from_name("fuzzy"), std::invalid_argument);
  CHECK(label_mode_from_name("deterministic") == LabelMode::Deterministic);
  CHECK(label_mode_from_name("stochastic") == LabelMode::Stochastic);
}
