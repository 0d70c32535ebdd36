#include "aps/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "aps/error.hpp"
#include "aps/version.hpp"

namespace aps {

using nlohmann::json;

void TrainConfig::validate() const {
  loss.validate();
  solver.validate();
  opt.validate();
  APS_CHECK(hidden > 0, "TrainConfig: hidden must be > 0");
  APS_CHECK(epochs >= 1, "TrainConfig: epochs must be >= 1");
  APS_CHECK(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
  APS_CHECK(std::isfinite(gamma) && gamma >= 0.0 && gamma <= 1.0,
            "TrainConfig: gamma must lie in [0, 1]");
  APS_CHECK(eval_every >= 1, "TrainConfig: eval_every must be >= 1");
  APS_CHECK(n_bins >= 1, "TrainConfig: n_bins must be >= 1");
}

double eval_pref_accuracy(const RewardModel& model,
                          const std::vector<PreferencePair>& pairs,
                          double gamma) {
  APS_CHECK(!pairs.empty(), "eval_pref_accuracy: no pairs");
  double correct = 0.0;
  for (const auto& pair : pairs) {
    const double delta = model.pair_delta(pair.winner, pair.loser, gamma);
    if (delta > 0.0) {
      correct += 1.0;
    } else if (delta == 0.0) {
      correct += 0.5;
    }
  }
  return correct / static_cast<double>(pairs.size());
}

namespace {

// Per-pair loss evaluation shared by every loss kind.  The adaptive kinds
// solve for the instance scale first; the others run at the fixed scale 1,
// through the same expressions, so configs that collapse the adaptive family
// onto cross-entropy reproduce its arithmetic exactly.
struct PairEval {
  double delta;
  double tau;
  double loss;
  double upstream;  // d loss / d delta
};

PairEval eval_pair(const RewardModel& model, const PreferencePair& pair,
                   const TrainConfig& cfg) {
  PairEval ev;
  ev.delta = model.pair_delta(pair.winner, pair.loser, cfg.gamma);
  APS_REQUIRE(std::isfinite(ev.delta),
              "train: non-finite reward difference (diverged parameters?)");
  ev.tau = cfg.loss.adaptive() ? solve_tau(ev.delta, cfg.loss, cfg.solver).tau : 1.0;
  ev.loss = pair_loss(ev.delta, ev.tau, cfg.loss);
  ev.upstream = grad_delta(ev.delta, ev.tau, cfg.loss);
  APS_REQUIRE(std::isfinite(ev.loss), "train: non-finite loss");
  return ev;
}

std::vector<double> bin_means(const std::vector<double>& values,
                              const std::vector<int>& bins, int n_bins) {
  std::vector<double> sums(n_bins, 0.0);
  std::vector<int> counts(n_bins, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    sums[bins[i]] += values[i];
    ++counts[bins[i]];
  }
  for (int b = 0; b < n_bins; ++b) sums[b] = counts[b] > 0 ? sums[b] / counts[b] : 0.0;
  return sums;
}

}  // namespace

TrainReport train_reward_model(const Dataset& ds, const TrainConfig& cfg,
                               RewardModel* out_model) {
  cfg.validate();
  APS_CHECK(!ds.train.empty(), "train: empty training split");
  APS_CHECK(static_cast<int>(ds.train.size()) >= cfg.n_bins,
            "train: fewer training pairs than strength bins");
  const auto t_start = std::chrono::steady_clock::now();

  ModelConfig mc;
  mc.arch = cfg.arch;
  mc.input_dim = ds.cfg.input_dim;
  mc.hidden = cfg.hidden;
  RewardModel model(mc, cfg.seed);
  Optimizer opt(cfg.opt, model.params().size());
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0xD1B54A32D192ED03ULL);

  const int n = static_cast<int>(ds.train.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(model.params().size());

  TrainReport report;
  report.task = "reward";
  report.loss = cfg.loss;
  report.config = train_config_json(cfg);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int stop = std::min(n, start + cfg.batch_size);
      const auto batch_n = static_cast<double>(stop - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (int i = start; i < stop; ++i) {
        const PreferencePair& pair = ds.train[order[i]];
        const PairEval ev = eval_pair(model, pair, cfg);
        loss_sum += ev.loss;
        model.accumulate_pair_grad(pair.winner, pair.loser, cfg.gamma,
                                   ev.upstream / batch_n, grad);
      }
      opt.step(model.params(), grad);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / n;
    const bool eval_now = epoch % cfg.eval_every == 0 || epoch == cfg.epochs;
    stats.train_acc = eval_now ? eval_pref_accuracy(model, ds.train, cfg.gamma)
                               : std::numeric_limits<double>::quiet_NaN();
    stats.test_acc = eval_now && !ds.test.empty()
                         ? eval_pref_accuracy(model, ds.test, cfg.gamma)
                         : std::numeric_limits<double>::quiet_NaN();
    report.epochs.push_back(stats);
  }

  // Final per-pair analytics on the training split.
  report.final_tau.reserve(n);
  report.final_delta.reserve(n);
  report.strength.reserve(n);
  std::vector<double> abs_delta(n);
  for (int i = 0; i < n; ++i) {
    const PairEval ev = eval_pair(model, ds.train[i], cfg);
    report.final_tau.push_back(ev.tau);
    report.final_delta.push_back(ev.delta);
    report.strength.push_back(ds.train[i].strength);
    abs_delta[i] = std::abs(ev.delta);
  }
  report.n_bins = cfg.n_bins;
  const auto [mn, mx] = std::minmax_element(report.strength.begin(), report.strength.end());
  report.degenerate_bins = *mn == *mx;
  const std::vector<int> bins = strength_bins(ds.train, cfg.n_bins);
  report.bin_strength_mean = bin_means(report.strength, bins, cfg.n_bins);
  report.bin_tau_mean = bin_means(report.final_tau, bins, cfg.n_bins);
  report.bin_abs_delta_mean = bin_means(abs_delta, bins, cfg.n_bins);

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  if (out_model != nullptr) *out_model = std::move(model);
  return report;
}

json loss_config_json(const LossConfig& cfg) {
  return json{{"kind", loss_kind_name(cfg.kind)},
              {"tau0", cfg.tau0},
              {"tau_max", cfg.tau_max},
              {"rho0", cfg.rho0},
              {"hinge_margin", cfg.hinge_margin}};
}

LossConfig loss_config_from_json(const json& j) {
  LossConfig cfg;
  cfg.kind = loss_kind_from_name(j.at("kind").get<std::string>());
  cfg.tau0 = j.at("tau0").get<double>();
  cfg.tau_max = j.at("tau_max").get<double>();
  cfg.rho0 = j.at("rho0").get<double>();
  cfg.hinge_margin = j.at("hinge_margin").get<double>();
  return cfg;
}

json solve_options_json(const SolveOptions& opt) {
  return json{{"iters", opt.iters},
              {"init_tau", opt.init_tau},
              {"grad_tol", opt.grad_tol},
              {"zero_delta_eps", opt.zero_delta_eps},
              {"bisect_iters", opt.bisect_iters}};
}

SolveOptions solve_options_from_json(const json& j) {
  SolveOptions opt;
  opt.iters = j.at("iters").get<int>();
  opt.init_tau = j.at("init_tau").get<double>();
  opt.grad_tol = j.at("grad_tol").get<double>();
  opt.zero_delta_eps = j.at("zero_delta_eps").get<double>();
  opt.bisect_iters = j.at("bisect_iters").get<int>();
  return opt;
}

json opt_config_json(const OptConfig& cfg) {
  return json{{"kind", opt_kind_name(cfg.kind)},
              {"lr", cfg.lr},
              {"beta1", cfg.beta1},
              {"beta2", cfg.beta2},
              {"eps", cfg.eps}};
}

OptConfig opt_config_from_json(const json& j) {
  OptConfig cfg;
  cfg.kind = opt_kind_from_name(j.at("kind").get<std::string>());
  cfg.lr = j.at("lr").get<double>();
  cfg.beta1 = j.at("beta1").get<double>();
  cfg.beta2 = j.at("beta2").get<double>();
  cfg.eps = j.at("eps").get<double>();
  return cfg;
}

json train_config_json(const TrainConfig& cfg) {
  return json{{"loss", loss_config_json(cfg.loss)},
              {"solver", solve_options_json(cfg.solver)},
              {"opt", opt_config_json(cfg.opt)},
              {"arch", model_arch_name(cfg.arch)},
              {"hidden", cfg.hidden},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"gamma", cfg.gamma},
              {"eval_every", cfg.eval_every},
              {"n_bins", cfg.n_bins},
              {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.loss = loss_config_from_json(j.at("loss"));
  cfg.solver = solve_options_from_json(j.at("solver"));
  cfg.opt = opt_config_from_json(j.at("opt"));
  cfg.arch = model_arch_from_name(j.at("arch").get<std::string>());
  cfg.hidden = j.at("hidden").get<int>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.gamma = j.at("gamma").get<double>();
  cfg.eval_every = j.at("eval_every").get<int>();
  cfg.n_bins = j.at("n_bins").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

namespace {

json nan_to_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

double null_to_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

json report_to_json(const TrainReport& report) {
  json epochs = json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back(json{{"epoch", e.epoch},
                          {"mean_loss", e.mean_loss},
                          {"train_acc", nan_to_null(e.train_acc)},
                          {"test_acc", nan_to_null(e.test_acc)}});
  }
  return json{{"format", "train-report"},
              {"version", kReportFormatVersion},
              {"task", report.task},
              {"loss", loss_config_json(report.loss)},
              {"config", report.config},
              {"epochs", epochs},
              {"final_tau", report.final_tau},
              {"final_delta", report.final_delta},
              {"strength", report.strength},
              {"n_bins", report.n_bins},
              {"bin_strength_mean", report.bin_strength_mean},
              {"bin_tau_mean", report.bin_tau_mean},
              {"bin_abs_delta_mean", report.bin_abs_delta_mean},
              {"degenerate_bins", report.degenerate_bins},
              {"wall_seconds", report.wall_seconds}};
}

TrainReport report_from_json(const json& j) {
  APS_REQUIRE(j.value("format", "") == "train-report", "report: wrong format tag");
  APS_REQUIRE(j.value("version", -1) == kReportFormatVersion,
              "report: unsupported report version");
  TrainReport report;
  report.task = j.at("task").get<std::string>();
  report.loss = loss_config_from_json(j.at("loss"));
  report.config = j.at("config");
  for (const auto& e : j.at("epochs")) {
    EpochStats stats;
    stats.epoch = e.at("epoch").get<int>();
    stats.mean_loss = e.at("mean_loss").get<double>();
    stats.train_acc = null_to_nan(e.at("train_acc"));
    stats.test_acc = null_to_nan(e.at("test_acc"));
    report.epochs.push_back(stats);
  }
  report.final_tau = j.at("final_tau").get<std::vector<double>>();
  report.final_delta = j.at("final_delta").get<std::vector<double>>();
  report.strength = j.at("strength").get<std::vector<double>>();
  report.n_bins = j.at("n_bins").get<int>();
  report.bin_strength_mean = j.at("bin_strength_mean").get<std::vector<double>>();
  report.bin_tau_mean = j.at("bin_tau_mean").get<std::vector<double>>();
  report.bin_abs_delta_mean = j.at("bin_abs_delta_mean").get<std::vector<double>>();
  report.degenerate_bins = j.at("degenerate_bins").get<bool>();
  report.wall_seconds = j.at("wall_seconds").get<double>();
  return report;
}

void save_report(const std::string& path, const TrainReport& report) {
  std::ofstream out(path);
  APS_REQUIRE(out.good(), "save_report: cannot open " + path);
  out << report_to_json(report).dump(2) << "\n";
  APS_REQUIRE(out.good(), "save_report: write failed for " + path);
}

TrainReport load_report(const std::string& path) {
  std::ifstream in(path);
  APS_REQUIRE(in.good(), "load_report: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail_runtime("load_report: " + path + ": " + e.what());
  }
  return report_from_json(j);
}

}  // namespace aps
