#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "aps/data.hpp"
#include "aps/optim.hpp"
#include "aps/tau.hpp"

namespace aps {

struct TrainConfig {
  LossConfig loss;
  SolveOptions solver;
  OptConfig opt;
  ModelArch arch = ModelArch::Mlp2;
  int hidden = 64;
  int epochs = 10;
  int batch_size = 32;
  double gamma = 1.0;
  int eval_every = 1;  // preference-accuracy cadence in epochs
  int n_bins = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  // NaN when the epoch fell between evaluation points.
  double train_acc = 0.0;
  double test_acc = 0.0;
};

// Everything downstream analysis needs: learning curves, the final per-pair
// scales and reward differences on the training split, and their
// strength-bin means.  Serialized as JSON with round-trip exact doubles.
struct TrainReport {
  std::string task;       // "reward" or "dpo"
  LossConfig loss;        // typed echo of the loss family
  nlohmann::json config;  // full config echo
  std::vector<EpochStats> epochs;
  std::vector<double> final_tau;    // 1.0 for the non-adaptive kinds
  std::vector<double> final_delta;  // learned reward differences
  std::vector<double> strength;     // true reward differences
  int n_bins = 0;
  std::vector<double> bin_strength_mean, bin_tau_mean, bin_abs_delta_mean;
  bool degenerate_bins = false;  // all strengths identical
  double wall_seconds = 0.0;
};

TrainReport train_reward_model(const Dataset& ds, const TrainConfig& cfg,
                               RewardModel* out_model = nullptr);

// Fraction of pairs ranked correctly by the model; exact ties count 1/2.
double eval_pref_accuracy(const RewardModel& model,
                          const std::vector<PreferencePair>& pairs,
                          double gamma);

nlohmann::json loss_config_json(const LossConfig& cfg);
LossConfig loss_config_from_json(const nlohmann::json& j);
nlohmann::json solve_options_json(const SolveOptions& opt);
SolveOptions solve_options_from_json(const nlohmann::json& j);
nlohmann::json opt_config_json(const OptConfig& cfg);
OptConfig opt_config_from_json(const nlohmann::json& j);

nlohmann::json train_config_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const TrainReport& report);
TrainReport report_from_json(const nlohmann::json& j);
void save_report(const std::string& path, const TrainReport& report);
TrainReport load_report(const std::string& path);

}  // namespace aps
