#include "aps/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "json.hpp"

#include "aps/error.hpp"
#include "aps/math.hpp"
#include "aps/version.hpp"

namespace aps {

using nlohmann::json;

const char* label_mode_name(LabelMode mode) {
  return mode == LabelMode::Deterministic ? "deterministic" : "stochastic";
}

LabelMode label_mode_from_name(const std::string& name) {
  if (name == "deterministic") return LabelMode::Deterministic;
  if (name == "stochastic") return LabelMode::Stochastic;
  fail_precondition("unknown label mode '" + name + "' (expected deterministic or stochastic)");
}

void DataConfig::validate() const {
  APS_CHECK(n_pairs > 0, "DataConfig: n_pairs must be > 0");
  APS_CHECK(input_dim > 0, "DataConfig: input_dim must be > 0");
  APS_CHECK(segment_length >= 1, "DataConfig: segment_length must be >= 1");
  APS_CHECK(std::isfinite(gamma) && gamma >= 0.0 && gamma <= 1.0,
            "DataConfig: gamma must lie in [0, 1]");
  APS_CHECK(std::isfinite(noise_scale) && noise_scale > 0.0,
            "DataConfig: noise_scale must be > 0");
  APS_CHECK(std::isfinite(tie_eps) && tie_eps >= 0.0, "DataConfig: tie_eps must be >= 0");
  APS_CHECK(test_fraction >= 0.0 && test_fraction < 1.0,
            "DataConfig: test_fraction must lie in [0, 1)");
  if (truth_arch == ModelArch::Mlp2) {
    APS_CHECK(truth_hidden > 0, "DataConfig: truth_hidden must be > 0");
  }
}

Dataset generate_dataset(const DataConfig& cfg) {
  cfg.validate();
  ModelConfig truth_cfg;
  truth_cfg.arch = cfg.truth_arch;
  truth_cfg.input_dim = cfg.input_dim;
  truth_cfg.hidden = cfg.truth_hidden;
  Dataset ds{cfg, RewardModel(truth_cfg, cfg.seed ^ 0x9E3779B97F4A7C15ULL), {}, {}};

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const auto draw_segment = [&] {
    Segment seg;
    seg.length = cfg.segment_length;
    seg.x.resize(static_cast<std::size_t>(cfg.segment_length) * cfg.input_dim);
    for (double& v : seg.x) v = normal(rng);
    return seg;
  };

  const long long budget = 100LL * cfg.n_pairs;
  long long attempts = 0;
  std::vector<PreferencePair> pairs;
  pairs.reserve(cfg.n_pairs);
  while (static_cast<int>(pairs.size()) < cfg.n_pairs) {
    APS_REQUIRE(attempts < budget,
                "generate_dataset: tie-resampling budget exhausted; the planted reward "
                "separates too few segment pairs (raise tie_eps tolerance or reseed)");
    ++attempts;
    Segment z1 = draw_segment();
    Segment z2 = draw_segment();
    const double r1 = ds.truth.segment_reward(z1, cfg.gamma);
    const double r2 = ds.truth.segment_reward(z2, cfg.gamma);
    const double diff = r1 - r2;
    PreferencePair pair;
    if (cfg.mode == LabelMode::Deterministic) {
      if (std::abs(diff) <= cfg.tie_eps) continue;  // resample near-ties
      const bool first_wins = diff > 0.0;
      pair.winner = first_wins ? std::move(z1) : std::move(z2);
      pair.loser = first_wins ? std::move(z2) : std::move(z1);
      pair.strength = std::abs(diff);
      pair.p_star = std::numeric_limits<double>::quiet_NaN();
    } else {
      const bool first_wins = uniform(rng) < sigmoid(cfg.noise_scale * diff);
      pair.winner = first_wins ? std::move(z1) : std::move(z2);
      pair.loser = first_wins ? std::move(z2) : std::move(z1);
      pair.strength = first_wins ? diff : -diff;
      pair.p_star = sigmoid(cfg.noise_scale * pair.strength);
    }
    pairs.push_back(std::move(pair));
  }

  const int n_test = static_cast<int>(std::lround(cfg.test_fraction * cfg.n_pairs));
  const int n_train = cfg.n_pairs - n_test;
  APS_CHECK(n_train >= 1, "DataConfig: test_fraction leaves no training pairs");
  ds.train.assign(std::make_move_iterator(pairs.begin()),
                  std::make_move_iterator(pairs.begin() + n_train));
  ds.test.assign(std::make_move_iterator(pairs.begin() + n_train),
                 std::make_move_iterator(pairs.end()));
  return ds;
}

std::vector<int> strength_bins(const std::vector<PreferencePair>& pairs, int n_bins) {
  APS_CHECK(n_bins >= 1, "strength_bins: n_bins must be >= 1");
  APS_CHECK(pairs.size() >= static_cast<std::size_t>(n_bins),
            "strength_bins: fewer pairs than bins");
  const int n = static_cast<int>(pairs.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Ties resolve by original index, keeping the assignment stable.
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (pairs[a].strength != pairs[b].strength) {
      return pairs[a].strength < pairs[b].strength;
    }
    return a < b;
  });
  std::vector<int> bin(n);
  const int base = n / n_bins;
  const int rem = n % n_bins;
  int pos = 0;
  for (int b = 0; b < n_bins; ++b) {
    const int count = base + (b < rem ? 1 : 0);
    for (int i = 0; i < count; ++i) bin[order[pos++]] = b;
  }
  return bin;
}

json data_config_json(const DataConfig& cfg) {
  return json{{"n_pairs", cfg.n_pairs},
              {"input_dim", cfg.input_dim},
              {"segment_length", cfg.segment_length},
              {"gamma", cfg.gamma},
              {"label_mode", label_mode_name(cfg.mode)},
              {"noise_scale", cfg.noise_scale},
              {"tie_eps", cfg.tie_eps},
              {"test_fraction", cfg.test_fraction},
              {"seed", cfg.seed},
              {"truth_arch", model_arch_name(cfg.truth_arch)},
              {"truth_hidden", cfg.truth_hidden}};
}

DataConfig data_config_from_json(const json& j) {
  DataConfig cfg;
  cfg.n_pairs = j.at("n_pairs").get<int>();
  cfg.input_dim = j.at("input_dim").get<int>();
  cfg.segment_length = j.at("segment_length").get<int>();
  cfg.gamma = j.at("gamma").get<double>();
  cfg.mode = label_mode_from_name(j.at("label_mode").get<std::string>());
  cfg.noise_scale = j.at("noise_scale").get<double>();
  cfg.tie_eps = j.at("tie_eps").get<double>();
  cfg.test_fraction = j.at("test_fraction").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.truth_arch = model_arch_from_name(j.at("truth_arch").get<std::string>());
  cfg.truth_hidden = j.at("truth_hidden").get<int>();
  return cfg;
}

namespace {

json nan_to_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

void save_pairs_jsonl(const std::string& path, const Dataset& ds,
                      const std::vector<PreferencePair>& pairs,
                      const std::string& split_name) {
  std::ofstream out(path);
  APS_REQUIRE(out.good(), "save_pairs_jsonl: cannot open " + path);
  json header;
  header["format"] = "preference-pairs";
  header["version"] = kDatasetFormatVersion;
  header["split"] = split_name;
  header["n_pairs"] = pairs.size();
  header["config"] = data_config_json(ds.cfg);
  header["truth"] = {{"arch", model_arch_name(ds.truth.config().arch)},
                     {"input_dim", ds.truth.config().input_dim},
                     {"hidden", ds.truth.config().hidden},
                     {"params", ds.truth.params()}};
  out << header.dump() << "\n";
  for (const auto& pair : pairs) {
    json line{{"winner", pair.winner.x},
              {"loser", pair.loser.x},
              {"strength", pair.strength},
              {"p_star", nan_to_null(pair.p_star)}};
    out << line.dump() << "\n";
  }
  APS_REQUIRE(out.good(), "save_pairs_jsonl: write failed for " + path);
}

LoadedPairs load_pairs_jsonl(const std::string& path) {
  std::ifstream in(path);
  APS_REQUIRE(in.good(), "load_pairs_jsonl: cannot open " + path);
  std::string text;
  APS_REQUIRE(static_cast<bool>(std::getline(in, text)), "load_pairs_jsonl: " + path + " is empty");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    fail_runtime("load_pairs_jsonl: " + path + " line 1: " + e.what());
  }
  APS_REQUIRE(header.value("format", "") == "preference-pairs",
              "load_pairs_jsonl: " + path + " is not a preference-pair file");
  APS_REQUIRE(header.value("version", -1) == kDatasetFormatVersion,
              "load_pairs_jsonl: unsupported format version in " + path);

  LoadedPairs out;
  try {
    out.cfg = data_config_from_json(header.at("config"));
    out.split_name = header.value("split", "");
    const json& truth = header.at("truth");
    ModelConfig mc;
    mc.arch = model_arch_from_name(truth.at("arch").get<std::string>());
    mc.input_dim = truth.at("input_dim").get<int>();
    mc.hidden = truth.at("hidden").get<int>();
    RewardModel model = RewardModel::zeros(mc);
    auto params = truth.at("params").get<std::vector<double>>();
    APS_REQUIRE(params.size() == mc.param_count(),
                "load_pairs_jsonl: planted-truth parameter count mismatch in " + path);
    model.params() = std::move(params);
    out.truth = std::move(model);
  } catch (const json::exception& e) {
    fail_runtime("load_pairs_jsonl: " + path + " line 1: " + e.what());
  }
  APS_REQUIRE(out.cfg.input_dim == out.truth.config().input_dim,
              "load_pairs_jsonl: header input_dim disagrees with the planted truth in " + path);

  const std::size_t expect =
      static_cast<std::size_t>(out.cfg.segment_length) * out.cfg.input_dim;
  const auto declared = header.at("n_pairs").get<std::size_t>();
  std::size_t line_no = 1;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      fail_runtime("load_pairs_jsonl: " + path + " line " + std::to_string(line_no) + ": " +
                   e.what());
    }
    PreferencePair pair;
    try {
      pair.winner = Segment{out.cfg.segment_length, j.at("winner").get<std::vector<double>>()};
      pair.loser = Segment{out.cfg.segment_length, j.at("loser").get<std::vector<double>>()};
      pair.strength = j.at("strength").get<double>();
      const json& p = j.at("p_star");
      pair.p_star = p.is_null() ? std::numeric_limits<double>::quiet_NaN() : p.get<double>();
    } catch (const json::exception& e) {
      fail_runtime("load_pairs_jsonl: " + path + " line " + std::to_string(line_no) + ": " +
                   e.what());
    }
    APS_REQUIRE(pair.winner.x.size() == expect && pair.loser.x.size() == expect,
                "load_pairs_jsonl: " + path + " line " + std::to_string(line_no) +
                    ": segment size does not match segment_length * input_dim");
    out.pairs.push_back(std::move(pair));
  }
  APS_REQUIRE(out.pairs.size() == declared,
              "load_pairs_jsonl: " + path + " declares " + std::to_string(declared) +
                  " pairs but contains " + std::to_string(out.pairs.size()));
  return out;
}

void save_dataset(const std::string& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  save_pairs_jsonl(dir + "/train.jsonl", ds, ds.train, "train");
  save_pairs_jsonl(dir + "/test.jsonl", ds, ds.test, "test");
}

Dataset load_dataset(const std::string& dir) {
  LoadedPairs train = load_pairs_jsonl(dir + "/train.jsonl");
  LoadedPairs test = load_pairs_jsonl(dir + "/test.jsonl");
  APS_REQUIRE(train.cfg.input_dim == test.cfg.input_dim &&
                  train.cfg.segment_length == test.cfg.segment_length &&
                  train.truth.params() == test.truth.params(),
              "load_dataset: train/test headers disagree in " + dir);
  Dataset ds{train.cfg, std::move(train.truth), std::move(train.pairs),
             std::move(test.pairs)};
  return ds;
}

}  // namespace aps
