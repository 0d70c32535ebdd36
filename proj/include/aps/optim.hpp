#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace aps {

enum class OptKind { Sgd, Adam };

const char* opt_kind_name(OptKind kind);
OptKind opt_kind_from_name(const std::string& name);

struct OptConfig {
  OptKind kind = OptKind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

class Optimizer {
 public:
  Optimizer(const OptConfig& cfg, std::size_t n_params);

  // In-place parameter update; rejects size mismatches and non-finite
  // gradients.
  void step(std::vector<double>& params, const std::vector<double>& grad);

  int steps_taken() const { return t_; }

 private:
  OptConfig cfg_;
  int t_ = 0;
  std::vector<double> m_, v_;  // Adam moments (empty for SGD)
};

}  // namespace aps
