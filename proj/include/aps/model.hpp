#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aps {

// A segment is a fixed-length sequence of per-step feature vectors stored
// flat: x.size() == length * input_dim.
struct Segment {
  int length = 1;
  std::vector<double> x;
};

enum class ModelArch { Linear, Mlp2 };

const char* model_arch_name(ModelArch arch);
ModelArch model_arch_from_name(const std::string& name);

struct ModelConfig {
  ModelArch arch = ModelArch::Mlp2;
  int input_dim = 0;
  int hidden = 64;  // width of both hidden layers of the Mlp2 arch

  void validate() const;
  std::size_t param_count() const;
};

// Scalar reward over feature vectors.  Linear: w.x + b.  Mlp2: two tanh
// hidden layers followed by a linear head.  Parameters live in one flat
// vector so optimizers and checkpoints treat every architecture uniformly.
class RewardModel {
 public:
  RewardModel() = default;  // empty shell, only useful as an assignment target
  RewardModel(const ModelConfig& cfg, std::uint64_t seed);  // seeded init
  static RewardModel zeros(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  double reward(const double* x) const;
  double segment_reward(const Segment& seg, double gamma) const;

  // Reward difference winner minus loser (discounted segment rewards).
  double pair_delta(const Segment& winner, const Segment& loser,
                    double gamma) const;

  // Accumulates upstream * d(pair_delta)/d(params) into grad (exact
  // backpropagation; grad must have param_count entries).
  void accumulate_pair_grad(const Segment& winner, const Segment& loser,
                            double gamma, double upstream,
                            std::vector<double>& grad) const;

 private:
  void check_segment(const Segment& seg) const;
  double step_forward(const double* x) const;  // fills the activation scratch
  void step_backward(const double* x, double coeff, std::vector<double>& grad) const;

  ModelConfig cfg_;
  std::vector<double> params_;
  // Activation scratch reused across calls; the model is single-writer like
  // everything else in the training loop.
  mutable std::vector<double> a1_, h1_, a2_, h2_;
};

// Checkpoint container: JSON with a format/version tag, the architecture
// descriptor, and the flat parameter vector (round-trip exact doubles).
void save_checkpoint(const std::string& path, const RewardModel& model);
RewardModel load_checkpoint(const std::string& path);

}  // namespace aps
