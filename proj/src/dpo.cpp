#include "aps/dpo.hpp"

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

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions) {
  APS_CHECK(n_states > 0 && n_actions > 0, "TabularPolicy: grid must be positive");
  return {n_states, n_actions,
          std::vector<double>(static_cast<std::size_t>(n_states) * n_actions, 0.0)};
}

void TabularPolicy::validate() const {
  APS_CHECK(n_states > 0 && n_actions > 0, "TabularPolicy: grid must be positive");
  APS_CHECK(logits.size() == static_cast<std::size_t>(n_states) * n_actions,
            "TabularPolicy: logits size does not match the grid");
  for (const double v : logits) {
    APS_CHECK(std::isfinite(v), "TabularPolicy: non-finite logit");
  }
}

double TabularPolicy::log_prob(int s, int a) const {
  APS_CHECK(s >= 0 && s < n_states && a >= 0 && a < n_actions,
            "TabularPolicy::log_prob: index out of range");
  const double* row = logits.data() + static_cast<std::size_t>(s) * n_actions;
  double m = row[0];
  for (int i = 1; i < n_actions; ++i) m = std::max(m, row[i]);
  double z = 0.0;
  for (int i = 0; i < n_actions; ++i) z += std::exp(row[i] - m);
  return row[a] - m - std::log(z);
}

void DpoDataConfig::validate() const {
  APS_CHECK(n_states > 0, "DpoDataConfig: n_states must be > 0");
  APS_CHECK(n_actions >= 2, "DpoDataConfig: n_actions must be >= 2");
  APS_CHECK(n_pairs > 0, "DpoDataConfig: n_pairs must be > 0");
  APS_CHECK(std::isfinite(noise_scale) && noise_scale > 0.0,
            "DpoDataConfig: noise_scale must be > 0");
  APS_CHECK(std::isfinite(tie_eps) && tie_eps >= 0.0, "DpoDataConfig: tie_eps must be >= 0");
}

DpoDataset generate_dpo_dataset(const DpoDataConfig& cfg) {
  cfg.validate();
  DpoDataset ds;
  ds.n_states = cfg.n_states;
  ds.n_actions = cfg.n_actions;
  ds.seed = cfg.seed;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ds.truth.resize(static_cast<std::size_t>(cfg.n_states) * cfg.n_actions);
  for (double& v : ds.truth) v = normal(rng);

  std::uniform_int_distribution<int> pick_s(0, cfg.n_states - 1);
  std::uniform_int_distribution<int> pick_a(0, cfg.n_actions - 1);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const long long budget = 100LL * cfg.n_pairs;
  long long attempts = 0;
  while (static_cast<int>(ds.pairs.size()) < cfg.n_pairs) {
    APS_REQUIRE(attempts < budget, "generate_dpo_dataset: tie-resampling budget exhausted");
    ++attempts;
    const int s = pick_s(rng);
    const int a1 = pick_a(rng);
    const int a2 = pick_a(rng);
    if (a1 == a2) continue;
    const double diff = ds.truth[static_cast<std::size_t>(s) * cfg.n_actions + a1] -
                        ds.truth[static_cast<std::size_t>(s) * cfg.n_actions + a2];
    DpoPair pair;
    pair.s = s;
    if (cfg.mode == LabelMode::Deterministic) {
      if (std::abs(diff) <= cfg.tie_eps) continue;
      pair.a_w = diff > 0.0 ? a1 : a2;
      pair.a_l = diff > 0.0 ? a2 : a1;
    } else {
      const bool first_wins = uniform(rng) < sigmoid(cfg.noise_scale * diff);
      pair.a_w = first_wins ? a1 : a2;
      pair.a_l = first_wins ? a2 : a1;
    }
    ds.pairs.push_back(pair);
  }
  return ds;
}

void save_dpo_jsonl(const std::string& path, const DpoDataset& ds) {
  std::ofstream out(path);
  APS_REQUIRE(out.good(), "save_dpo_jsonl: cannot open " + path);
  json header{{"format", "dpo-pairs"},
              {"version", kDatasetFormatVersion},
              {"n_states", ds.n_states},
              {"n_actions", ds.n_actions},
              {"n_pairs", ds.pairs.size()},
              {"seed", ds.seed}};
  header["truth"] = ds.truth.empty() ? json(nullptr) : json(ds.truth);
  out << header.dump() << "\n";
  for (const auto& pair : ds.pairs) {
    out << json{{"s", pair.s}, {"a_w", pair.a_w}, {"a_l", pair.a_l}}.dump() << "\n";
  }
  APS_REQUIRE(out.good(), "save_dpo_jsonl: write failed for " + path);
}

DpoDataset load_dpo_jsonl(const std::string& path) {
  std::ifstream in(path);
  APS_REQUIRE(in.good(), "load_dpo_jsonl: cannot open " + path);
  std::string text;
  APS_REQUIRE(static_cast<bool>(std::getline(in, text)), "load_dpo_jsonl: " + path + " is empty");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    fail_runtime("load_dpo_jsonl: " + path + " line 1: " + e.what());
  }
  APS_REQUIRE(header.value("format", "") == "dpo-pairs",
              "load_dpo_jsonl: " + path + " is not a DPO pair file");
  APS_REQUIRE(header.value("version", -1) == kDatasetFormatVersion,
              "load_dpo_jsonl: unsupported format version in " + path);
  DpoDataset ds;
  ds.n_states = header.at("n_states").get<int>();
  ds.n_actions = header.at("n_actions").get<int>();
  ds.seed = header.at("seed").get<std::uint64_t>();
  if (!header.at("truth").is_null()) {
    ds.truth = header.at("truth").get<std::vector<double>>();
    APS_REQUIRE(ds.truth.size() == static_cast<std::size_t>(ds.n_states) * ds.n_actions,
                "load_dpo_jsonl: truth table size mismatch in " + path);
  }
  const auto declared = header.at("n_pairs").get<std::size_t>();
  std::size_t line_no = 1;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    DpoPair pair;
    try {
      const json j = json::parse(text);
      pair.s = j.at("s").get<int>();
      pair.a_w = j.at("a_w").get<int>();
      pair.a_l = j.at("a_l").get<int>();
    } catch (const json::exception& e) {
      fail_runtime("load_dpo_jsonl: " + path + " line " + std::to_string(line_no) + ": " +
                   e.what());
    }
    APS_REQUIRE(pair.s >= 0 && pair.s < ds.n_states && pair.a_w >= 0 &&
                    pair.a_w < ds.n_actions && pair.a_l >= 0 && pair.a_l < ds.n_actions &&
                    pair.a_w != pair.a_l,
                "load_dpo_jsonl: " + path + " line " + std::to_string(line_no) +
                    ": pair indices out of range");
    ds.pairs.push_back(pair);
  }
  APS_REQUIRE(ds.pairs.size() == declared,
              "load_dpo_jsonl: " + path + " declares " + std::to_string(declared) +
                  " pairs but contains " + std::to_string(ds.pairs.size()));
  return ds;
}

double log_ratio(const TabularPolicy& policy, const TabularPolicy& ref, int s, int a) {
  APS_CHECK(policy.n_states == ref.n_states && policy.n_actions == ref.n_actions,
            "log_ratio: policy and reference grids differ");
  return policy.log_prob(s, a) - ref.log_prob(s, a);
}

double dpo_pair_delta(const TabularPolicy& policy, const TabularPolicy& ref,
                      const DpoPair& pair) {
  return log_ratio(policy, ref, pair.s, pair.a_w) - log_ratio(policy, ref, pair.s, pair.a_l);
}

double dpo_loss(const TabularPolicy& policy, const TabularPolicy& ref,
                const std::vector<DpoPair>& pairs, double beta) {
  APS_CHECK(std::isfinite(beta) && beta > 0.0, "dpo_loss: beta must be > 0");
  APS_CHECK(!pairs.empty(), "dpo_loss: no pairs");
  double total = 0.0;
  for (const auto& pair : pairs) {
    total += -log_sigmoid(beta * dpo_pair_delta(policy, ref, pair));
  }
  return total / static_cast<double>(pairs.size());
}

double ada_dpo_loss(const TabularPolicy& policy, const TabularPolicy& ref,
                    const std::vector<DpoPair>& pairs, const LossConfig& cfg,
                    const SolveOptions& opt, std::vector<double>* taus) {
  APS_CHECK(cfg.adaptive(), "ada_dpo_loss: loss kind has no tau parameter");
  APS_CHECK(!pairs.empty(), "ada_dpo_loss: no pairs");
  if (taus != nullptr) taus->clear();
  double total = 0.0;
  for (const auto& pair : pairs) {
    const double delta = dpo_pair_delta(policy, ref, pair);
    const double tau = solve_tau(delta, cfg, opt).tau;
    if (taus != nullptr) taus->push_back(tau);
    total += pair_loss(delta, tau, cfg);
  }
  return total / static_cast<double>(pairs.size());
}

namespace {

// d(pair delta)/d(logits) is +1 at (s, a_w) and -1 at (s, a_l): the softmax
// normalizers cancel inside the policy/reference ratio difference.
void scatter_pair_grad(const DpoPair& pair, double weight, int n_actions,
                       std::vector<double>& grad) {
  grad[static_cast<std::size_t>(pair.s) * n_actions + pair.a_w] += weight;
  grad[static_cast<std::size_t>(pair.s) * n_actions + pair.a_l] -= weight;
}

}  // namespace

void dpo_grad(const TabularPolicy& policy, const TabularPolicy& ref,
              const std::vector<DpoPair>& pairs, double beta,
              std::vector<double>& grad) {
  APS_CHECK(grad.size() == policy.logits.size(), "dpo_grad: gradient size mismatch");
  APS_CHECK(!pairs.empty(), "dpo_grad: no pairs");
  const double inv_n = 1.0 / static_cast<double>(pairs.size());
  for (const auto& pair : pairs) {
    const double delta = dpo_pair_delta(policy, ref, pair);
    // sigmoid(x) - 1 written as -sigmoid(-x) to keep the tail (see
    // grad_delta); also makes the beta = 1 path bit-identical to the
    // adaptive objective with a pinned unit scale.
    const double w = -beta * sigmoid(-beta * delta) * inv_n;
    scatter_pair_grad(pair, w, policy.n_actions, grad);
  }
}

void ada_dpo_grad(const TabularPolicy& policy, const TabularPolicy& ref,
                  const std::vector<DpoPair>& pairs, const LossConfig& cfg,
                  const SolveOptions& opt, std::vector<double>& grad) {
  APS_CHECK(grad.size() == policy.logits.size(), "ada_dpo_grad: gradient size mismatch");
  APS_CHECK(!pairs.empty(), "ada_dpo_grad: no pairs");
  const double inv_n = 1.0 / static_cast<double>(pairs.size());
  for (const auto& pair : pairs) {
    const double delta = dpo_pair_delta(policy, ref, pair);
    const double tau = solve_tau(delta, cfg, opt).tau;
    const double w = grad_delta(delta, tau, cfg) * inv_n;
    scatter_pair_grad(pair, w, policy.n_actions, grad);
  }
}

double reparam_error(const std::vector<double>& reward_table, const TabularPolicy& ref,
                     double beta, int n_states, int n_actions) {
  APS_CHECK(std::isfinite(beta) && beta > 0.0, "reparam_error: beta must be > 0");
  ref.validate();
  APS_CHECK(ref.n_states == n_states && ref.n_actions == n_actions,
            "reparam_error: reference grid mismatch");
  APS_CHECK(reward_table.size() == static_cast<std::size_t>(n_states) * n_actions,
            "reparam_error: reward table size mismatch");

  double worst = 0.0;
  std::vector<double> t(n_actions), pi_r(n_actions);
  for (int s = 0; s < n_states; ++s) {
    // t_a = log pi_ref(a|s) + r(s,a)/beta; the induced policy is the softmax
    // of t and log Z(s) its logsumexp.
    double m = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < n_actions; ++a) {
      t[a] = ref.log_prob(s, a) + reward_table[static_cast<std::size_t>(s) * n_actions + a] / beta;
      m = std::max(m, t[a]);
    }
    double z = 0.0;
    for (int a = 0; a < n_actions; ++a) z += std::exp(t[a] - m);
    const double log_z = m + std::log(z);
    // Materialize the induced policy as probabilities so the identity below
    // passes through real exp/log round trips.
    for (int a = 0; a < n_actions; ++a) pi_r[a] = std::exp(t[a] - log_z);
    for (int a = 0; a < n_actions; ++a) {
      const double recovered =
          beta * (std::log(pi_r[a]) - ref.log_prob(s, a)) + beta * log_z;
      worst = std::max(worst,
                       std::abs(recovered - reward_table[static_cast<std::size_t>(s) * n_actions + a]));
    }
  }
  return worst;
}

void DpoTrainConfig::validate() const {
  loss.validate();
  solver.validate();
  opt.validate();
  APS_CHECK(std::isfinite(beta) && beta > 0.0, "DpoTrainConfig: beta must be > 0");
  APS_CHECK(epochs >= 1, "DpoTrainConfig: epochs must be >= 1");
  APS_CHECK(batch_size >= 1, "DpoTrainConfig: batch_size must be >= 1");
  APS_CHECK(eval_every >= 1, "DpoTrainConfig: eval_every must be >= 1");
  APS_CHECK(n_bins >= 1, "DpoTrainConfig: n_bins must be >= 1");
}

json dpo_config_json(const DpoTrainConfig& cfg) {
  return json{{"loss", loss_config_json(cfg.loss)},
              {"beta", cfg.beta},
              {"solver", solve_options_json(cfg.solver)},
              {"opt", opt_config_json(cfg.opt)},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"eval_every", cfg.eval_every},
              {"n_bins", cfg.n_bins},
              {"seed", cfg.seed}};
}

TrainReport train_dpo(const DpoDataset& ds, const TabularPolicy& ref,
                      const DpoTrainConfig& cfg, TabularPolicy* out_policy) {
  cfg.validate();
  ref.validate();
  APS_CHECK(!ds.pairs.empty(), "train_dpo: empty pair list");
  APS_CHECK(cfg.loss.kind != LossKind::Hinge, "train_dpo: hinge is not a DPO objective");
  for (const auto& pair : ds.pairs) {
    APS_CHECK(pair.s >= 0 && pair.s < ds.n_states && pair.a_w >= 0 &&
                  pair.a_w < ds.n_actions && pair.a_l >= 0 && pair.a_l < ds.n_actions,
              "train_dpo: pair indices out of range");
  }
  APS_CHECK(ref.n_states == ds.n_states && ref.n_actions == ds.n_actions,
            "train_dpo: reference grid does not match the dataset");
  const auto t_start = std::chrono::steady_clock::now();

  TabularPolicy policy = ref;  // start from the reference policy
  Optimizer opt(cfg.opt, policy.logits.size());
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0xD1B54A32D192ED03ULL);
  const int n = static_cast<int>(ds.pairs.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(policy.logits.size());

  const bool adaptive = cfg.loss.adaptive();
  const auto pair_eval = [&](const DpoPair& pair) {
    const double delta = dpo_pair_delta(policy, ref, pair);
    APS_REQUIRE(std::isfinite(delta), "train_dpo: non-finite implicit reward difference");
    double tau = 1.0, loss = 0.0, up = 0.0;
    if (adaptive) {
      tau = solve_tau(delta, cfg.loss, cfg.solver).tau;
      loss = pair_loss(delta, tau, cfg.loss);
      up = grad_delta(delta, tau, cfg.loss);
    } else {
      loss = -log_sigmoid(cfg.beta * delta);
      // Same tail-safe form as grad_delta; keeps beta = 1 bit-identical to
      // the adaptive objective with a pinned unit scale.
      up = -cfg.beta * sigmoid(-cfg.beta * delta);
    }
    return std::tuple{delta, tau, loss, up};
  };

  const auto ranking_acc = [&] {
    double correct = 0.0;
    for (const auto& pair : ds.pairs) {
      const double delta = dpo_pair_delta(policy, ref, pair);
      if (delta > 0.0) {
        correct += 1.0;
      } else if (delta == 0.0) {
        correct += 0.5;
      }
    }
    return correct / n;
  };

  TrainReport report;
  report.task = "dpo";
  report.loss = cfg.loss;
  report.config = dpo_config_json(cfg);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int stop = std::min(n, start + cfg.batch_size);
      const auto batch_n = static_cast<double>(stop - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (int i = start; i < stop; ++i) {
        const DpoPair& pair = ds.pairs[order[i]];
        const auto [delta, tau, loss, up] = pair_eval(pair);
        loss_sum += loss;
        scatter_pair_grad(pair, up / batch_n, ds.n_actions, grad);
      }
      opt.step(policy.logits, grad);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / n;
    const bool eval_now = epoch % cfg.eval_every == 0 || epoch == cfg.epochs;
    stats.train_acc = eval_now ? ranking_acc() : std::numeric_limits<double>::quiet_NaN();
    stats.test_acc = std::numeric_limits<double>::quiet_NaN();
    report.epochs.push_back(stats);
  }

  report.final_tau.reserve(n);
  report.final_delta.reserve(n);
  for (const auto& pair : ds.pairs) {
    const auto [delta, tau, loss, up] = pair_eval(pair);
    report.final_tau.push_back(tau);
    report.final_delta.push_back(delta);
  }
  if (!ds.truth.empty()) {
    std::vector<PreferencePair> strength_proxy(n);
    for (int i = 0; i < n; ++i) {
      const auto& pair = ds.pairs[i];
      const double diff =
          ds.truth[static_cast<std::size_t>(pair.s) * ds.n_actions + pair.a_w] -
          ds.truth[static_cast<std::size_t>(pair.s) * ds.n_actions + pair.a_l];
      report.strength.push_back(diff);
      strength_proxy[i].strength = diff;
    }
    if (n >= cfg.n_bins) {
      report.n_bins = cfg.n_bins;
      const auto [mn, mx] = std::minmax_element(report.strength.begin(), report.strength.end());
      report.degenerate_bins = *mn == *mx;
      const std::vector<int> bins = strength_bins(strength_proxy, cfg.n_bins);
      std::vector<double> sums_s(cfg.n_bins, 0.0), sums_t(cfg.n_bins, 0.0),
          sums_d(cfg.n_bins, 0.0);
      std::vector<int> counts(cfg.n_bins, 0);
      for (int i = 0; i < n; ++i) {
        const int b = bins[i];
        sums_s[b] += report.strength[i];
        sums_t[b] += report.final_tau[i];
        sums_d[b] += std::abs(report.final_delta[i]);
        ++counts[b];
      }
      for (int b = 0; b < cfg.n_bins; ++b) {
        const double c = counts[b] > 0 ? counts[b] : 1;
        report.bin_strength_mean.push_back(sums_s[b] / c);
        report.bin_tau_mean.push_back(sums_t[b] / c);
        report.bin_abs_delta_mean.push_back(sums_d[b] / c);
      }
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  if (out_policy != nullptr) *out_policy = std::move(policy);
  return report;
}

}  // namespace aps
