#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aps/train.hpp"

namespace aps {

// Tabular softmax policy over a finite state/action grid.
struct TabularPolicy {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> logits;  // row-major states x actions

  static TabularPolicy uniform(int n_states, int n_actions);
  void validate() const;
  double log_prob(int s, int a) const;  // log softmax of the state row
};

struct DpoPair {
  int s = 0;
  int a_w = 0;
  int a_l = 0;
};

struct DpoDataset {
  int n_states = 0;
  int n_actions = 0;
  std::vector<DpoPair> pairs;
  // Planted ground-truth reward table (states x actions), empty when the
  // preferences came from elsewhere.
  std::vector<double> truth;
  std::uint64_t seed = 0;
};

struct DpoDataConfig {
  int n_states = 20;
  int n_actions = 8;
  int n_pairs = 0;
  LabelMode mode = LabelMode::Deterministic;
  double noise_scale = 1.0;
  double tie_eps = 1e-9;
  std::uint64_t seed = 0;

  void validate() const;
};

DpoDataset generate_dpo_dataset(const DpoDataConfig& cfg);

void save_dpo_jsonl(const std::string& path, const DpoDataset& ds);
DpoDataset load_dpo_jsonl(const std::string& path);

// Implicit reward difference of a pair: the policy/reference log ratio of
// the winner action minus that of the loser action, computed through log
// softmax (no unnormalized shortcuts).
double log_ratio(const TabularPolicy& policy, const TabularPolicy& ref,
                 int s, int a);
double dpo_pair_delta(const TabularPolicy& policy, const TabularPolicy& ref,
                      const DpoPair& pair);

// Mean DPO loss -log_sigmoid(beta * delta) over the pairs.
double dpo_loss(const TabularPolicy& policy, const TabularPolicy& ref,
                const std::vector<DpoPair>& pairs, double beta);

// Mean adaptive variant with a per-pair scale solve; optionally reports the
// solved scales.
double ada_dpo_loss(const TabularPolicy& policy, const TabularPolicy& ref,
                    const std::vector<DpoPair>& pairs, const LossConfig& cfg,
                    const SolveOptions& opt, std::vector<double>* taus = nullptr);

// Gradients of the two objectives with respect to the policy logits.
void dpo_grad(const TabularPolicy& policy, const TabularPolicy& ref,
              const std::vector<DpoPair>& pairs, double beta,
              std::vector<double>& grad);
void ada_dpo_grad(const TabularPolicy& policy, const TabularPolicy& ref,
                  const std::vector<DpoPair>& pairs, const LossConfig& cfg,
                  const SolveOptions& opt, std::vector<double>& grad);

// Max absolute error of the closed-form policy identity: for the policy
// induced by a reward table r at inverse temperature beta,
//   r(s,a) = beta * log(pi_r(a|s)/pi_ref(a|s)) + beta * log Z(s)
// with Z(s) the exact partition sum.  Checkable to ~1e-9 in tabular form.
double reparam_error(const std::vector<double>& reward_table,
                     const TabularPolicy& ref, double beta,
                     int n_states, int n_actions);

struct DpoTrainConfig {
  LossConfig loss;     // CrossEntropy selects the plain DPO baseline
  double beta = 1.0;   // inverse temperature of the plain baseline
  SolveOptions solver;
  OptConfig opt;
  int epochs = 50;
  int batch_size = 32;
  int eval_every = 1;
  int n_bins = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json dpo_config_json(const DpoTrainConfig& cfg);

// Gradient-based policy training; fills a TrainReport (task "dpo") whose
// accuracy columns measure ranking agreement of the implicit rewards.
TrainReport train_dpo(const DpoDataset& ds, const TabularPolicy& ref,
                      const DpoTrainConfig& cfg, TabularPolicy* out_policy = nullptr);

}  // namespace aps
