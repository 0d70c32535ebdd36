#pragma once

#include <cstdint>
#include <vector>

#include "aps/train.hpp"

namespace aps {

// Fixed evaluation set for a contextual bandit: for every context, m
// candidate feature vectors; a policy picks the candidate its reward model
// scores highest and earns the true reward of that candidate.  Candidates
// are (context + noise)/sqrt(2), so they correlate within a context while
// each coordinate stays marginally standard normal (the distribution the
// reward models were trained on).
struct BanditConfig {
  int input_dim = 8;
  int n_candidates = 10;
  int n_eval_contexts = 2000;
  std::uint64_t seed = 0;

  void validate() const;
};

class BanditEnv {
 public:
  explicit BanditEnv(const BanditConfig& cfg);

  const BanditConfig& config() const { return cfg_; }
  const double* candidate(int ctx, int j) const;

 private:
  BanditConfig cfg_;
  std::vector<double> features_;  // contexts x candidates x dim
};

// Mean true reward of the argmax-scored candidate (ties resolved toward the
// lowest index).
double policy_return(const BanditEnv& env, const RewardModel& truth,
                     const RewardModel& scorer);

// Mean true reward of the truth-optimal candidate; upper bound on any return.
double oracle_return(const BanditEnv& env, const RewardModel& truth);

struct StudyEntry {
  TrainConfig train;
  double test_acc = 0.0;
  double bandit_return = 0.0;
};

// Model-selection alignment probe: train every config on the dataset, pick
// one config by downstream return and one by test preference accuracy, and
// report the return forfeited by the accuracy-based choice.
struct StudyOutcome {
  std::vector<StudyEntry> entries;
  int by_return = 0;    // index of the return-selected config
  int by_accuracy = 0;  // index of the accuracy-selected config
  double gap = 0.0;     // return(by_return) - return(by_accuracy), >= 0
};

StudyOutcome run_selection_study(const Dataset& ds, const BanditEnv& env,
                                 const std::vector<TrainConfig>& grid);

}  // namespace aps
