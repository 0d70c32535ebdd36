#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "aps/model.hpp"

namespace aps {

enum class LabelMode { Deterministic, Stochastic };

const char* label_mode_name(LabelMode mode);
LabelMode label_mode_from_name(const std::string& name);

// One labeled comparison.  strength is the true reward difference
// r*(winner) - r*(loser); positive by construction under deterministic
// labels, possibly negative for stochastically mislabeled pairs.  p_star is
// the recorded win probability of the stored orientation (NaN when labels
// are deterministic).
struct PreferencePair {
  Segment winner, loser;
  double strength = 0.0;
  double p_star = 0.0;
};

struct DataConfig {
  int n_pairs = 0;
  int input_dim = 0;
  int segment_length = 1;
  double gamma = 1.0;
  LabelMode mode = LabelMode::Deterministic;
  double noise_scale = 1.0;  // s in p* = sigmoid(s * true difference)
  double tie_eps = 1e-9;     // deterministic mode resamples |difference| <= tie_eps
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  ModelArch truth_arch = ModelArch::Linear;
  int truth_hidden = 64;

  void validate() const;
};

struct Dataset {
  DataConfig cfg;
  RewardModel truth;  // planted ground-truth reward, embedded in the files
  std::vector<PreferencePair> train, test;
};

// Synthesizes a dataset from a freshly planted ground-truth model.  Features
// are i.i.d. standard normal.  Deterministic mode resamples near-ties with a
// budget of 100 * n_pairs draws and fails loudly if it runs out.
Dataset generate_dataset(const DataConfig& cfg);

// Equal-count percentile bins over pair strength (stable under ties); returns
// the bin index of every pair in input order.  Requires n_bins >= 1 and at
// least n_bins pairs.
std::vector<int> strength_bins(const std::vector<PreferencePair>& pairs, int n_bins);

nlohmann::json data_config_json(const DataConfig& cfg);
DataConfig data_config_from_json(const nlohmann::json& j);

// JSONL serialization: one header object (format tag, config echo, planted
// truth) followed by one pair per line.  Doubles survive the round trip
// bit-exactly (shortest round-trip decimal encoding).
void save_pairs_jsonl(const std::string& path, const Dataset& ds,
                      const std::vector<PreferencePair>& pairs,
                      const std::string& split_name);

struct LoadedPairs {
  DataConfig cfg;
  RewardModel truth;
  std::string split_name;
  std::vector<PreferencePair> pairs;
};

LoadedPairs load_pairs_jsonl(const std::string& path);

// Convenience wrappers used by the CLI: <dir>/train.jsonl + <dir>/test.jsonl.
void save_dataset(const std::string& dir, const Dataset& ds);
Dataset load_dataset(const std::string& dir);

}  // namespace aps
