#include "aps/bandit.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "aps/error.hpp"

namespace aps {

void BanditConfig::validate() const {
  APS_CHECK(input_dim > 0, "BanditConfig: input_dim must be > 0");
  APS_CHECK(n_candidates >= 2, "BanditConfig: n_candidates must be >= 2");
  APS_CHECK(n_eval_contexts >= 1, "BanditConfig: n_eval_contexts must be >= 1");
}

BanditEnv::BanditEnv(const BanditConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  const int d = cfg.input_dim;
  features_.resize(static_cast<std::size_t>(cfg.n_eval_contexts) * cfg.n_candidates * d);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> context(d);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int c = 0; c < cfg.n_eval_contexts; ++c) {
    for (double& v : context) v = normal(rng);
    for (int j = 0; j < cfg.n_candidates; ++j) {
      double* out = features_.data() +
                    (static_cast<std::size_t>(c) * cfg.n_candidates + j) * d;
      for (int i = 0; i < d; ++i) out[i] = (context[i] + normal(rng)) * inv_sqrt2;
    }
  }
}

const double* BanditEnv::candidate(int ctx, int j) const {
  APS_CHECK(ctx >= 0 && ctx < cfg_.n_eval_contexts && j >= 0 && j < cfg_.n_candidates,
            "BanditEnv::candidate: index out of range");
  return features_.data() +
         (static_cast<std::size_t>(ctx) * cfg_.n_candidates + j) * cfg_.input_dim;
}

namespace {

double mean_return(const BanditEnv& env, const RewardModel& truth,
                   const RewardModel* scorer) {
  const auto& cfg = env.config();
  APS_CHECK(truth.config().input_dim == cfg.input_dim,
            "policy_return: truth dimensionality mismatch");
  if (scorer != nullptr) {
    APS_CHECK(scorer->config().input_dim == cfg.input_dim,
              "policy_return: scorer dimensionality mismatch");
  }
  double total = 0.0;
  for (int c = 0; c < cfg.n_eval_contexts; ++c) {
    int best_j = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < cfg.n_candidates; ++j) {
      const double score = (scorer != nullptr ? *scorer : truth).reward(env.candidate(c, j));
      if (score > best_score) {  // ties keep the lowest index
        best_score = score;
        best_j = j;
      }
    }
    total += truth.reward(env.candidate(c, best_j));
  }
  return total / cfg.n_eval_contexts;
}

}  // namespace

double policy_return(const BanditEnv& env, const RewardModel& truth,
                     const RewardModel& scorer) {
  return mean_return(env, truth, &scorer);
}

double oracle_return(const BanditEnv& env, const RewardModel& truth) {
  return mean_return(env, truth, nullptr);
}

StudyOutcome run_selection_study(const Dataset& ds, const BanditEnv& env,
                                 const std::vector<TrainConfig>& grid) {
  APS_CHECK(!grid.empty(), "run_selection_study: empty config grid");
  APS_CHECK(!ds.test.empty(), "run_selection_study: dataset has no test split");
  StudyOutcome out;
  out.entries.reserve(grid.size());
  for (const auto& cfg : grid) {
    RewardModel model;
    train_reward_model(ds, cfg, &model);
    StudyEntry entry;
    entry.train = cfg;
    entry.test_acc = eval_pref_accuracy(model, ds.test, cfg.gamma);
    entry.bandit_return = policy_return(env, ds.truth, model);
    out.entries.push_back(std::move(entry));
  }
  for (std::size_t i = 1; i < out.entries.size(); ++i) {
    // Strict comparisons resolve ties toward the lowest index on both axes.
    if (out.entries[i].bandit_return > out.entries[out.by_return].bandit_return) {
      out.by_return = static_cast<int>(i);
    }
    if (out.entries[i].test_acc > out.entries[out.by_accuracy].test_acc) {
      out.by_accuracy = static_cast<int>(i);
    }
  }
  out.gap = out.entries[out.by_return].bandit_return -
            out.entries[out.by_accuracy].bandit_return;
  return out;
}

}  // namespace aps
