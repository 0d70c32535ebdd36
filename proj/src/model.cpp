#include "aps/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

#include "aps/error.hpp"
#include "aps/kernels.hpp"
#include "aps/version.hpp"

namespace aps {

using nlohmann::json;

const char* model_arch_name(ModelArch arch) {
  switch (arch) {
    case ModelArch::Linear: return "linear";
    case ModelArch::Mlp2: return "mlp2";
  }
  fail_precondition("model_arch_name: bad enum value");
}

ModelArch model_arch_from_name(const std::string& name) {
  if (name == "linear") return ModelArch::Linear;
  if (name == "mlp2") return ModelArch::Mlp2;
  fail_precondition("unknown model arch '" + name + "' (expected linear or mlp2)");
}

void ModelConfig::validate() const {
  APS_CHECK(input_dim > 0, "ModelConfig: input_dim must be > 0");
  if (arch == ModelArch::Mlp2) APS_CHECK(hidden > 0, "ModelConfig: hidden must be > 0");
}

std::size_t ModelConfig::param_count() const {
  const auto d = static_cast<std::size_t>(input_dim);
  if (arch == ModelArch::Linear) return d + 1;
  const auto h = static_cast<std::size_t>(hidden);
  return h * d + h + h * h + h + h + 1;
}

// Parameter layout (flat):
//   linear: w[d], b
//   mlp2:   W1[h*d], b1[h], W2[h*h], b2[h], w3[h], b3

RewardModel::RewardModel(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  cfg_ = cfg;
  params_.resize(cfg.param_count());
  std::mt19937_64 rng(seed);
  if (cfg.arch == ModelArch::Linear) {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int i = 0; i < cfg.input_dim; ++i) params_[i] = dist(rng) / std::sqrt(cfg.input_dim);
    params_[cfg.input_dim] = 0.0;
  } else {
    // Uniform fan-in scaling keeps the tanh layers in their active range.
    const int d = cfg.input_dim, h = cfg.hidden;
    auto fill = [&rng](double* p, std::size_t n, int fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (std::size_t i = 0; i < n; ++i) p[i] = dist(rng);
    };
    double* p = params_.data();
    fill(p, static_cast<std::size_t>(h) * d, d);         // W1
    p += static_cast<std::size_t>(h) * d;
    fill(p, h, d);                                       // b1
    p += h;
    fill(p, static_cast<std::size_t>(h) * h, h);         // W2
    p += static_cast<std::size_t>(h) * h;
    fill(p, h, h);                                       // b2
    p += h;
    fill(p, h, h);                                       // w3
    p += h;
    *p = 0.0;                                            // b3
  }
  if (cfg.arch == ModelArch::Mlp2) {
    a1_.resize(cfg.hidden);
    h1_.resize(cfg.hidden);
    a2_.resize(cfg.hidden);
    h2_.resize(cfg.hidden);
  }
}

RewardModel RewardModel::zeros(const ModelConfig& cfg) {
  cfg.validate();
  RewardModel m;
  m.cfg_ = cfg;
  m.params_.assign(cfg.param_count(), 0.0);
  if (cfg.arch == ModelArch::Mlp2) {
    m.a1_.resize(cfg.hidden);
    m.h1_.resize(cfg.hidden);
    m.a2_.resize(cfg.hidden);
    m.h2_.resize(cfg.hidden);
  }
  return m;
}

double RewardModel::step_forward(const double* x) const {
  const auto& k = kernels::active();
  const int d = cfg_.input_dim;
  if (cfg_.arch == ModelArch::Linear) {
    return k.dot(params_.data(), x, d) + params_[d];
  }
  const int h = cfg_.hidden;
  const double* w1 = params_.data();
  const double* b1 = w1 + static_cast<std::size_t>(h) * d;
  const double* w2 = b1 + h;
  const double* b2 = w2 + static_cast<std::size_t>(h) * h;
  const double* w3 = b2 + h;
  const double b3 = w3[h];
  k.matvec(w1, x, a1_.data(), h, d);
  for (int i = 0; i < h; ++i) h1_[i] = std::tanh(a1_[i] + b1[i]);
  k.matvec(w2, h1_.data(), a2_.data(), h, h);
  for (int i = 0; i < h; ++i) h2_[i] = std::tanh(a2_[i] + b2[i]);
  return k.dot(w3, h2_.data(), h) + b3;
}

void RewardModel::step_backward(const double* x, double coeff,
                                std::vector<double>& grad) const {
  const auto& k = kernels::active();
  const int d = cfg_.input_dim;
  if (cfg_.arch == ModelArch::Linear) {
    k.axpy(coeff, x, grad.data(), d);
    grad[d] += coeff;
    return;
  }
  // step_forward must have run on this x; the scratch holds its activations.
  const int h = cfg_.hidden;
  const double* w2 = params_.data() + static_cast<std::size_t>(h) * d + h;
  const double* w3 = w2 + static_cast<std::size_t>(h) * h + h;
  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + static_cast<std::size_t>(h) * d;
  double* g_w2 = g_b1 + h;
  double* g_b2 = g_w2 + static_cast<std::size_t>(h) * h;
  double* g_w3 = g_b2 + h;
  double* g_b3 = g_w3 + h;

  k.axpy(coeff, h2_.data(), g_w3, h);
  *g_b3 += coeff;
  // Reuse the pre-activation scratch for the deltas flowing backwards.
  for (int i = 0; i < h; ++i) a2_[i] = coeff * w3[i] * (1.0 - h2_[i] * h2_[i]);
  k.rank1_update(g_w2, 1.0, a2_.data(), h1_.data(), h, h);
  k.axpy(1.0, a2_.data(), g_b2, h);
  k.matvec_t(w2, a2_.data(), a1_.data(), h, h);
  for (int i = 0; i < h; ++i) a1_[i] *= 1.0 - h1_[i] * h1_[i];
  k.rank1_update(g_w1, 1.0, a1_.data(), x, h, d);
  k.axpy(1.0, a1_.data(), g_b1, h);
}

void RewardModel::check_segment(const Segment& seg) const {
  APS_CHECK(seg.length >= 1, "Segment: length must be >= 1");
  APS_CHECK(seg.x.size() == static_cast<std::size_t>(seg.length) * cfg_.input_dim,
            "Segment: feature storage does not match length * input_dim");
}

double RewardModel::reward(const double* x) const { return step_forward(x); }

double RewardModel::segment_reward(const Segment& seg, double gamma) const {
  check_segment(seg);
  APS_CHECK(std::isfinite(gamma) && gamma >= 0.0 && gamma <= 1.0,
            "segment_reward: gamma must lie in [0, 1]");
  double total = 0.0;
  double discount = 1.0;
  for (int t = 0; t < seg.length; ++t) {
    total += discount * step_forward(seg.x.data() + static_cast<std::size_t>(t) * cfg_.input_dim);
    discount *= gamma;
  }
  return total;
}

double RewardModel::pair_delta(const Segment& winner, const Segment& loser,
                               double gamma) const {
  return segment_reward(winner, gamma) - segment_reward(loser, gamma);
}

void RewardModel::accumulate_pair_grad(const Segment& winner, const Segment& loser,
                                       double gamma, double upstream,
                                       std::vector<double>& grad) const {
  check_segment(winner);
  check_segment(loser);
  APS_CHECK(grad.size() == params_.size(), "accumulate_pair_grad: gradient size mismatch");
  APS_CHECK(std::isfinite(upstream), "accumulate_pair_grad: non-finite upstream");
  const auto step_grad = [&](const Segment& seg, double sign) {
    double discount = 1.0;
    for (int t = 0; t < seg.length; ++t) {
      const double* x = seg.x.data() + static_cast<std::size_t>(t) * cfg_.input_dim;
      step_forward(x);  // refresh activations for this step
      step_backward(x, sign * upstream * discount, grad);
      discount *= gamma;
    }
  };
  step_grad(winner, 1.0);
  step_grad(loser, -1.0);
}

void save_checkpoint(const std::string& path, const RewardModel& model) {
  json j;
  j["format"] = "reward-checkpoint";
  j["version"] = kCheckpointFormatVersion;
  j["arch"] = model_arch_name(model.config().arch);
  j["input_dim"] = model.config().input_dim;
  j["hidden"] = model.config().hidden;
  j["params"] = model.params();
  std::ofstream out(path);
  APS_REQUIRE(out.good(), "save_checkpoint: cannot open " + path);
  out << j.dump(2) << "\n";
  APS_REQUIRE(out.good(), "save_checkpoint: write failed for " + path);
}

RewardModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  APS_REQUIRE(in.good(), "load_checkpoint: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail_runtime("load_checkpoint: " + path + ": " + e.what());
  }
  APS_REQUIRE(j.value("format", "") == "reward-checkpoint",
              "load_checkpoint: " + path + " is not a reward checkpoint");
  APS_REQUIRE(j.value("version", -1) == kCheckpointFormatVersion,
              "load_checkpoint: unsupported checkpoint version in " + path);
  ModelConfig cfg;
  cfg.arch = model_arch_from_name(j.at("arch").get<std::string>());
  cfg.input_dim = j.at("input_dim").get<int>();
  cfg.hidden = j.at("hidden").get<int>();
  cfg.validate();
  auto params = j.at("params").get<std::vector<double>>();
  APS_REQUIRE(params.size() == cfg.param_count(),
              "load_checkpoint: parameter count does not match the architecture in " + path);
  for (const double v : params) {
    APS_REQUIRE(std::isfinite(v), "load_checkpoint: non-finite parameter in " + path);
  }
  RewardModel model = RewardModel::zeros(cfg);
  model.params() = std::move(params);
  return model;
}

}  // namespace aps
