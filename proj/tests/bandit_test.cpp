#include <cmath>
#include <stdexcept>

#include "doctest.h"

#include "aps/bandit.hpp"

using namespace aps;

namespace {

BanditConfig small_env_cfg() {
  BanditConfig cfg;
  cfg.input_dim = 5;
  cfg.n_candidates = 6;
  cfg.n_eval_contexts = 200;
  cfg.seed = 77;
  return cfg;
}

}  // namespace

TEST_CASE("environment features are seeded and deterministic") {
  const BanditEnv a(small_env_cfg());
  const BanditEnv b(small_env_cfg());
  for (int c = 0; c < 200; c += 37) {
    for (int j = 0; j < 6; ++j) {
      for (int k = 0; k < 5; ++k) {
        CHECK(a.candidate(c, j)[k] == b.candidate(c, j)[k]);
      }
    }
  }
  BanditConfig other = small_env_cfg();
  other.seed = 78;
  const BanditEnv c(other);
  CHECK(a.candidate(0, 0)[0] != c.candidate(0, 0)[0]);
}

TEST_CASE("scoring with the truth itself achieves the oracle return") {
  DataConfig dc;
  dc.n_pairs = 50;
  dc.input_dim = 5;
  dc.seed = 3;
  const Dataset ds = generate_dataset(dc);
  const BanditEnv env(small_env_cfg());
  CHECK(policy_return(env, ds.truth, ds.truth) == oracle_return(env, ds.truth));
}

TEST_CASE("no scorer beats the oracle") {
  DataConfig dc;
  dc.n_pairs = 50;
  dc.input_dim = 5;
  dc.seed = 4;
  const Dataset ds = generate_dataset(dc);
  const BanditEnv env(small_env_cfg());
  const double oracle = oracle_return(env, ds.truth);
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    ModelConfig mc;
    mc.arch = ModelArch::Mlp2;
    mc.input_dim = 5;
    mc.hidden = 4;
    const RewardModel scorer(mc, seed);
    CHECK(policy_return(env, ds.truth, scorer) <= oracle + 1e-15);
  }
}

TEST_CASE("selection study ranks configs and reports a nonnegative gap") {
  DataConfig dc;
  dc.n_pairs = 200;
  dc.input_dim = 5;
  dc.seed = 5;
  const Dataset ds = generate_dataset(dc);
  const BanditEnv env(small_env_cfg());
  std::vector<TrainConfig> grid;
  for (int epochs : {2, 8}) {
    TrainConfig cfg;
    cfg.loss.kind = LossKind::AdaptiveLinear;
    cfg.opt.kind = OptKind::Sgd;
    cfg.opt.lr = 0.05;
    cfg.arch = ModelArch::Linear;
    cfg.epochs = epochs;
    cfg.batch_size = 32;
    cfg.eval_every = epochs;
    cfg.seed = 1;
    grid.push_back(cfg);
  }
  const StudyOutcome out = run_selection_study(ds, env, grid);
  REQUIRE(out.entries.size() == 2);
  CHECK(out.gap >= 0.0);
  CHECK(out.gap == out.entries[out.by_return].bandit_return -
                       out.entries[out.by_accuracy].bandit_return);
  for (const StudyEntry& e : out.entries) {
    CHECK(e.test_acc >= 0.0);
    CHECK(e.test_acc <= 1.0);
    CHECK(e.bandit_return <= oracle_return(env, ds.truth) + 1e-15);
  }
  // by_return really is the argmax over returns.
  for (const StudyEntry& e : out.entries) {
    CHECK(out.entries[out.by_return].bandit_return >= e.bandit_return);
  }
}

TEST_CASE("bandit config validation") {
  BanditConfig cfg = small_env_cfg();
  cfg.n_candidates = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_env_cfg();
  cfg.input_dim = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_env_cfg();
  cfg.n_eval_contexts = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
