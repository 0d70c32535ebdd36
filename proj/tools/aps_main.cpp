// Command-line front end: data synthesis, reward/policy training, numerical
// verification, report analytics, and the model-selection study.
//
// Exit codes (stable, scripts key off them):
//   0  success
//   1  internal error (unexpected exception)
//   2  usage error (unknown flag/subcommand, bad flag value)
//   3  missing or unreadable input file
//   4  tolerance failure in a verification suite
//   5  training diverged or otherwise failed

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "aps/bandit.hpp"
#include "aps/data.hpp"
#include "aps/dpo.hpp"
#include "aps/error.hpp"
#include "aps/kernels.hpp"
#include "aps/model.hpp"
#include "aps/report_io.hpp"
#include "aps/tau.hpp"
#include "aps/train.hpp"
#include "aps/verify.hpp"
#include "aps/version.hpp"

namespace {

using aps::LossConfig;
using aps::TrainConfig;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMissingFile = 3;
constexpr int kExitTolerance = 4;
constexpr int kExitTraining = 5;

struct MissingFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingFileError("missing input: " + path);
  }
}

// Relative output paths land under $APS_OUT_ROOT when it is set.
std::string resolve_out(const std::string& out) {
  const char* root = std::getenv("APS_OUT_ROOT");
  if (root != nullptr && *root != '\0' && !std::filesystem::path(out).is_absolute()) {
    return (std::filesystem::path(root) / out).string();
  }
  return out;
}

double now_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Shared flag bundles.

struct LossFlags {
  std::string kind = "ada-lin";
  double tau0 = 0.1;
  double tau_max = 5.0;
  double rho0 = 0.1;
  double hinge_margin = 1.0;
  int newton_iters = 3;

  void add(CLI::App* cmd) {
    cmd->add_option("--loss", kind, "loss kind: ce | ada-lin | ada-quad | hinge")
        ->check(CLI::IsMember({"ce", "ada-lin", "ada-quad", "hinge"}))
        ->capture_default_str();
    cmd->add_option("--tau0", tau0, "scale floor")->capture_default_str();
    cmd->add_option("--tau-max", tau_max, "scale ceiling (linear-penalty kind)")
        ->capture_default_str();
    cmd->add_option("--rho0", rho0, "robustness radius / penalty weight")
        ->capture_default_str();
    cmd->add_option("--hinge-margin", hinge_margin, "margin of the hinge kind")
        ->capture_default_str();
    cmd->add_option("--newton-iters", newton_iters, "per-pair scale-solve steps")
        ->capture_default_str();
  }

  LossConfig to_config() const {
    LossConfig cfg;
    cfg.kind = aps::loss_kind_from_name(kind);
    cfg.tau0 = tau0;
    cfg.tau_max = tau_max;
    cfg.rho0 = rho0;
    cfg.hinge_margin = hinge_margin;
    return cfg;
  }
};

struct OptFlags {
  std::string optimizer = "adam";
  double lr = 1e-3;

  void add(CLI::App* cmd) {
    cmd->add_option("--optimizer", optimizer, "sgd | adam")
        ->check(CLI::IsMember({"sgd", "adam"}))
        ->capture_default_str();
    cmd->add_option("--lr", lr, "learning rate")->capture_default_str();
  }

  aps::OptConfig to_config() const {
    aps::OptConfig cfg;
    cfg.kind = aps::opt_kind_from_name(optimizer);
    cfg.lr = lr;
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// gen-data

struct GenDataArgs {
  int dim = 8;
  int pairs = 2000;
  int seg_len = 1;
  double gamma = 1.0;
  std::string label_mode = "deterministic";
  double noise_scale = 1.0;
  double tie_eps = 1e-9;
  double test_fraction = 0.2;
  std::string truth_arch = "linear";
  int truth_hidden = 64;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen_data(const GenDataArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  aps::DataConfig cfg;
  cfg.n_pairs = a.pairs;
  cfg.input_dim = a.dim;
  cfg.segment_length = a.seg_len;
  cfg.gamma = a.gamma;
  cfg.mode = aps::label_mode_from_name(a.label_mode);
  cfg.noise_scale = a.noise_scale;
  cfg.tie_eps = a.tie_eps;
  cfg.test_fraction = a.test_fraction;
  cfg.seed = a.seed;
  cfg.truth_arch = aps::model_arch_from_name(a.truth_arch);
  cfg.truth_hidden = a.truth_hidden;

  const aps::Dataset ds = aps::generate_dataset(cfg);
  const std::string out = resolve_out(a.out);
  std::filesystem::create_directories(out);
  aps::save_dataset(out, ds);

  aps::RunManifest m;
  m.command = "gen-data";
  m.config = aps::data_config_json(cfg);
  m.seed = cfg.seed;
  m.outputs = {"train.jsonl", "test.jsonl"};
  m.wall_seconds = now_seconds(t0);
  aps::write_manifest(out, m);
  std::printf("wrote %zu train / %zu test pairs to %s\n", ds.train.size(), ds.test.size(),
              out.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data;
  LossFlags loss;
  OptFlags opt;
  std::string arch = "mlp2";
  int hidden = 64;
  int epochs = 10;
  int batch = 32;
  int eval_every = 1;
  int bins = 5;
  std::uint64_t seed = 0;
  std::string out;
};

TrainConfig to_train_config(const TrainArgs& a, double gamma) {
  TrainConfig cfg;
  cfg.loss = a.loss.to_config();
  cfg.solver.iters = a.loss.newton_iters;
  cfg.solver.init_tau = std::clamp(1.0, cfg.loss.tau0, cfg.loss.omega_upper());
  cfg.opt = a.opt.to_config();
  cfg.arch = aps::model_arch_from_name(a.arch);
  cfg.hidden = a.hidden;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.gamma = gamma;
  cfg.eval_every = a.eval_every;
  cfg.n_bins = a.bins;
  cfg.seed = a.seed;
  return cfg;
}

double last_finite(const std::vector<aps::EpochStats>& epochs,
                   double aps::EpochStats::*field) {
  for (auto it = epochs.rbegin(); it != epochs.rend(); ++it) {
    if (std::isfinite((*it).*field)) return (*it).*field;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

int run_train(const TrainArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string data = resolve_out(a.data);
  require_file(data + "/train.jsonl");
  require_file(data + "/test.jsonl");
  const aps::Dataset ds = aps::load_dataset(data);
  const TrainConfig cfg = to_train_config(a, ds.cfg.gamma);

  aps::RewardModel model;
  aps::TrainReport report;
  try {
    report = aps::train_reward_model(ds, cfg, &model);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "training failed: %s\n", e.what());
    return kExitTraining;
  }

  const std::string out = resolve_out(a.out);
  std::filesystem::create_directories(out);
  aps::save_checkpoint(out + "/checkpoint.json", model);
  aps::save_report(out + "/report.json", report);

  aps::RunManifest m;
  m.command = "train";
  m.config = aps::train_config_json(cfg);
  m.seed = cfg.seed;
  m.inputs = {data + "/train.jsonl", data + "/test.jsonl"};
  m.outputs = {"checkpoint.json", "report.json"};
  m.wall_seconds = now_seconds(t0);
  aps::write_manifest(out, m);

  std::printf("train: %d epochs, final loss %.6g, train acc %.4f, test acc %.4f -> %s\n",
              cfg.epochs, report.epochs.empty() ? 0.0 : report.epochs.back().mean_loss,
              last_finite(report.epochs, &aps::EpochStats::train_acc),
              last_finite(report.epochs, &aps::EpochStats::test_acc), out.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

int run_verify(const std::string& suite) {
  std::vector<aps::CheckResult> results;
  try {
    results = aps::run_verify_suite(suite);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitUsage;
  }
  std::printf("%-10s %-52s %-6s %12s %10s %8s\n", "suite", "check", "status", "worst",
              "tolerance", "seconds");
  int failed = 0;
  for (const auto& r : results) {
    std::printf("%-10s %-52s %-6s %12.4g %10.3g %8.2f\n", r.suite.c_str(), r.name.c_str(),
                r.passed ? "PASS" : "FAIL", r.worst, r.tolerance, r.seconds);
    if (!r.passed) ++failed;
  }
  if (failed > 0) {
    std::printf("%d check(s) failed\n", failed);
    return kExitTolerance;
  }
  std::printf("all %zu checks passed\n", results.size());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string report;
  std::string out_dir;
};

void append_finite_series(std::vector<aps::Series>& out, const std::string& name,
                          const std::vector<double>& x, const std::vector<double>& y) {
  aps::Series s;
  s.name = name;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isfinite(y[i])) {
      s.x.push_back(x[i]);
      s.y.push_back(y[i]);
    }
  }
  if (!s.x.empty()) out.push_back(std::move(s));
}

int run_analyze(const AnalyzeArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string report_path = resolve_out(a.report);
  require_file(report_path);
  const aps::TrainReport rep = aps::load_report(report_path);
  const std::string out = resolve_out(a.out_dir);
  std::filesystem::create_directories(out);

  APS_REQUIRE(!rep.final_tau.empty(), "analyze: report has no per-pair scales");

  // Scale histogram over the final per-pair scales.
  {
    double lo = rep.final_tau[0], hi = rep.final_tau[0];
    for (const double t : rep.final_tau) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
    constexpr int kBins = 20;
    std::vector<double> edges(kBins + 1), counts(kBins, 0.0);
    for (int b = 0; b <= kBins; ++b) edges[b] = lo + (hi - lo) * b / kBins;
    for (const double t : rep.final_tau) {
      int b = static_cast<int>((t - lo) / (hi - lo) * kBins);
      b = std::clamp(b, 0, kBins - 1);
      counts[b] += 1.0;
    }
    std::vector<std::vector<double>> rows;
    for (int b = 0; b < kBins; ++b) rows.push_back({edges[b], edges[b + 1], counts[b]});
    aps::write_csv(out + "/tau_histogram.csv", {"bin_lo", "bin_hi", "count"}, rows);
    aps::write_histogram_svg(out + "/tau_histogram.svg", "final per-pair scales", "tau", edges,
                             counts);
  }

  // Per-strength-bin means of the scale and the learned difference magnitude.
  {
    std::vector<std::vector<double>> tau_rows, delta_rows;
    for (int b = 0; b < rep.n_bins; ++b) {
      tau_rows.push_back({static_cast<double>(b), rep.bin_strength_mean[b], rep.bin_tau_mean[b]});
      delta_rows.push_back(
          {static_cast<double>(b), rep.bin_strength_mean[b], rep.bin_abs_delta_mean[b]});
    }
    aps::write_csv(out + "/tau_by_strength.csv", {"bin", "strength_mean", "tau_mean"}, tau_rows);
    aps::write_csv(out + "/delta_by_strength.csv", {"bin", "strength_mean", "abs_delta_mean"},
                   delta_rows);
    aps::write_line_svg(out + "/tau_by_strength.svg", "scale vs preference strength",
                        "mean true difference (bin)", "mean tau",
                        {{"tau", [&] {
                            std::vector<double> v;
                            for (auto& r : tau_rows) v.push_back(r[1]);
                            return v;
                          }(),
                          [&] {
                            std::vector<double> v;
                            for (auto& r : tau_rows) v.push_back(r[2]);
                            return v;
                          }()}});
    aps::write_line_svg(out + "/delta_by_strength.svg",
                        "learned difference vs preference strength",
                        "mean true difference (bin)", "mean |learned difference|",
                        {{"abs_delta", [&] {
                            std::vector<double> v;
                            for (auto& r : delta_rows) v.push_back(r[1]);
                            return v;
                          }(),
                          [&] {
                            std::vector<double> v;
                            for (auto& r : delta_rows) v.push_back(r[2]);
                            return v;
                          }()}});
  }

  // Learning curves.
  {
    std::vector<std::vector<double>> rows;
    std::vector<double> ep, loss, tr, te;
    for (const auto& e : rep.epochs) {
      rows.push_back(
          {static_cast<double>(e.epoch), e.mean_loss, e.train_acc, e.test_acc});
      ep.push_back(e.epoch);
      loss.push_back(e.mean_loss);
      tr.push_back(e.train_acc);
      te.push_back(e.test_acc);
    }
    aps::write_csv(out + "/loss_curve.csv", {"epoch", "mean_loss", "train_acc", "test_acc"},
                   rows);
    std::vector<aps::Series> series;
    append_finite_series(series, "mean_loss", ep, loss);
    aps::write_line_svg(out + "/loss_curve.svg", "training loss", "epoch", "mean loss", series);
  }

  // Loss landscape after minimizing out the scale, against the plain
  // cross-entropy curve.
  {
    std::vector<std::vector<double>> rows;
    std::vector<double> xs, eff, ce;
    for (int i = 0; i <= 240; ++i) {
      const double d = -6.0 + 12.0 * i / 240.0;
      const double e = aps::effective_loss(d, rep.loss);
      const double c = aps::ce_loss(d);
      rows.push_back({d, e, c});
      xs.push_back(d);
      eff.push_back(e);
      ce.push_back(c);
    }
    aps::write_csv(out + "/effective_loss_curve.csv", {"delta", "effective_loss", "ce_loss"},
                   rows);
    aps::write_line_svg(out + "/effective_loss_curve.svg", "loss after scale adaptation",
                        "reward difference", "loss",
                        {{"effective", xs, eff}, {"cross-entropy", xs, ce}});
  }

  aps::RunManifest m;
  m.command = "analyze";
  m.config = json{{"report", report_path}};
  m.inputs = {report_path};
  m.outputs = {"tau_histogram.csv", "tau_by_strength.csv", "delta_by_strength.csv",
               "loss_curve.csv",    "effective_loss_curve.csv",
               "tau_histogram.svg", "tau_by_strength.svg", "delta_by_strength.svg",
               "loss_curve.svg",    "effective_loss_curve.svg"};
  m.wall_seconds = now_seconds(t0);
  aps::write_manifest(out, m);
  std::printf("analyze: wrote %zu artifacts to %s\n", m.outputs.size(), out.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// dpo

struct DpoArgs {
  std::string data;  // empty: synthesize below
  int states = 20;
  int actions = 8;
  int pairs = 3000;
  std::string label_mode = "stochastic";
  double noise_scale = 1.0;
  std::uint64_t data_seed = 1;
  LossFlags loss;
  OptFlags opt;
  double beta = 1.0;
  int epochs = 50;
  int batch = 32;
  int eval_every = 1;
  int bins = 5;
  std::uint64_t seed = 0;
  std::string out;
};

int run_dpo(const DpoArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string out = resolve_out(a.out);
  std::filesystem::create_directories(out);

  aps::DpoDataset ds;
  std::string data_path;
  bool generated = false;
  if (!a.data.empty()) {
    data_path = resolve_out(a.data);
    require_file(data_path);
    ds = aps::load_dpo_jsonl(data_path);
  } else {
    aps::DpoDataConfig dc;
    dc.n_states = a.states;
    dc.n_actions = a.actions;
    dc.n_pairs = a.pairs;
    dc.mode = aps::label_mode_from_name(a.label_mode);
    dc.noise_scale = a.noise_scale;
    dc.seed = a.data_seed;
    ds = aps::generate_dpo_dataset(dc);
    data_path = out + "/dpo_data.jsonl";
    aps::save_dpo_jsonl(data_path, ds);
    generated = true;
  }

  aps::DpoTrainConfig cfg;
  cfg.loss = a.loss.to_config();
  cfg.beta = a.beta;
  cfg.solver.iters = a.loss.newton_iters;
  cfg.solver.init_tau = std::clamp(1.0, cfg.loss.tau0, cfg.loss.omega_upper());
  cfg.opt = a.opt.to_config();
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.eval_every = a.eval_every;
  cfg.n_bins = a.bins;
  cfg.seed = a.seed;

  const aps::TabularPolicy ref = aps::TabularPolicy::uniform(ds.n_states, ds.n_actions);
  aps::TabularPolicy policy;
  aps::TrainReport report;
  try {
    report = aps::train_dpo(ds, ref, cfg, &policy);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "training failed: %s\n", e.what());
    return kExitTraining;
  }

  aps::save_report(out + "/report.json", report);
  {
    json pj{{"format", "tabular-policy"},
            {"version", aps::kCheckpointFormatVersion},
            {"n_states", policy.n_states},
            {"n_actions", policy.n_actions},
            {"logits", policy.logits}};
    std::ofstream f(out + "/policy.json");
    APS_REQUIRE(f.good(), "dpo: cannot open " + out + "/policy.json");
    f << pj.dump(2) << "\n";
    APS_REQUIRE(f.good(), "dpo: write failed for " + out + "/policy.json");
  }

  aps::RunManifest m;
  m.command = "dpo";
  m.config = aps::dpo_config_json(cfg);
  m.seed = cfg.seed;
  m.inputs = {data_path};
  m.outputs = {"report.json", "policy.json"};
  if (generated) m.outputs.push_back("dpo_data.jsonl");
  m.wall_seconds = now_seconds(t0);
  aps::write_manifest(out, m);

  std::printf("dpo: %d epochs, final loss %.6g, ranking acc %.4f -> %s\n", cfg.epochs,
              report.epochs.empty() ? 0.0 : report.epochs.back().mean_loss,
              last_finite(report.epochs, &aps::EpochStats::train_acc), out.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// align-study

struct AlignArgs {
  std::string grid;
  std::uint64_t env_seed = 0;
  int seeds = 10;
  std::string out;
};

int run_align_study(const AlignArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string grid_path = resolve_out(a.grid);
  require_file(grid_path);
  std::ifstream gf(grid_path);
  json gj;
  try {
    gf >> gj;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "align-study: bad grid file %s: %s\n", grid_path.c_str(), e.what());
    return kExitUsage;
  }

  // Grid files only need to spell out what differs from the defaults: user
  // keys are overlaid onto a serialized default config before parsing.
  aps::DataConfig data_cfg;
  aps::BanditConfig env_cfg;
  std::vector<std::string> ids;
  std::vector<TrainConfig> grid;
  try {
    json dj = aps::data_config_json(aps::DataConfig{});
    dj.merge_patch(gj.at("data"));
    data_cfg = aps::data_config_from_json(dj);
    if (gj.contains("bandit")) {
      const json& b = gj.at("bandit");
      env_cfg.input_dim = b.value("input_dim", data_cfg.input_dim);
      env_cfg.n_candidates = b.value("n_candidates", 10);
      env_cfg.n_eval_contexts = b.value("n_eval_contexts", 2000);
    } else {
      env_cfg.input_dim = data_cfg.input_dim;
    }
    for (const json& cj : gj.at("configs")) {
      ids.push_back(cj.value("id", "config-" + std::to_string(ids.size())));
      json tj = aps::train_config_json(TrainConfig{});
      tj.merge_patch(cj);
      grid.push_back(aps::train_config_from_json(tj));
    }
  } catch (const json::exception& e) {
    std::fprintf(stderr, "align-study: bad grid file %s: %s\n", grid_path.c_str(), e.what());
    return kExitUsage;
  }
  APS_REQUIRE(!grid.empty(), "align-study: empty configuration grid");

  const std::string out = resolve_out(a.out);
  std::filesystem::create_directories(out);

  std::ofstream csv(out + "/study.csv");
  APS_REQUIRE(csv.good(), "align-study: cannot open " + out + "/study.csv");
  csv << "seed,config_id,loss,tau0,tau_max,rho0,lr,epochs,test_acc,return\n";

  json per_seed = json::array();
  double gap_sum = 0.0;
  for (int s = 0; s < a.seeds; ++s) {
    aps::DataConfig dc = data_cfg;
    dc.seed = data_cfg.seed + static_cast<std::uint64_t>(s);
    const aps::Dataset ds = aps::generate_dataset(dc);
    aps::BanditConfig bc = env_cfg;
    bc.seed = a.env_seed + static_cast<std::uint64_t>(s);
    const aps::BanditEnv env(bc);

    std::vector<TrainConfig> seeded = grid;
    for (auto& cfg : seeded) cfg.seed = static_cast<std::uint64_t>(s);
    const aps::StudyOutcome outcome = aps::run_selection_study(ds, env, seeded);

    for (std::size_t k = 0; k < outcome.entries.size(); ++k) {
      const auto& e = outcome.entries[k];
      char buf[256];
      std::snprintf(buf, sizeof buf, "%d,%s,%s,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g\n", s,
                    ids[k].c_str(), aps::loss_kind_name(e.train.loss.kind), e.train.loss.tau0,
                    e.train.loss.tau_max, e.train.loss.rho0, e.train.opt.lr, e.train.epochs,
                    e.test_acc, e.bandit_return);
      csv << buf;
    }
    per_seed.push_back(json{{"seed", s},
                            {"by_return", ids[outcome.by_return]},
                            {"by_accuracy", ids[outcome.by_accuracy]},
                            {"gap", outcome.gap},
                            {"oracle_return", aps::oracle_return(env, ds.truth)}});
    gap_sum += outcome.gap;
    std::printf("seed %d: by-return %s, by-accuracy %s, gap %.6g\n", s,
                ids[outcome.by_return].c_str(), ids[outcome.by_accuracy].c_str(), outcome.gap);
  }
  csv.flush();
  APS_REQUIRE(csv.good(), "align-study: write failed for " + out + "/study.csv");

  json summary{{"format", "alignment-study"},
               {"version", aps::kReportFormatVersion},
               {"seeds", a.seeds},
               {"per_seed", per_seed},
               {"mean_gap", a.seeds > 0 ? gap_sum / a.seeds : 0.0}};
  {
    std::ofstream f(out + "/summary.json");
    APS_REQUIRE(f.good(), "align-study: cannot open " + out + "/summary.json");
    f << summary.dump(2) << "\n";
    APS_REQUIRE(f.good(), "align-study: write failed");
  }

  aps::RunManifest m;
  m.command = "align-study";
  m.config = gj;
  m.seed = a.env_seed;
  m.inputs = {grid_path};
  m.outputs = {"study.csv", "summary.json"};
  m.wall_seconds = now_seconds(t0);
  aps::write_manifest(out, m);
  std::printf("align-study: mean gap %.6g over %d seed(s) -> %s\n",
              a.seeds > 0 ? gap_sum / a.seeds : 0.0, a.seeds, out.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep-rho

struct SweepArgs {
  std::string rho0_list;
  std::string data;
  LossFlags loss;
  OptFlags opt;
  std::string arch = "mlp2";
  int hidden = 64;
  int epochs = 10;
  int batch = 32;
  int seeds = 3;
  std::uint64_t seed = 0;
  std::string out;
};

int run_sweep_rho(const SweepArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> rhos;
  {
    std::stringstream ss(a.rho0_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        rhos.push_back(v);
      } catch (const std::exception&) {
        std::fprintf(stderr, "sweep-rho: bad --rho0-list entry '%s'\n", tok.c_str());
        return kExitUsage;
      }
    }
  }
  if (rhos.empty()) {
    std::fprintf(stderr, "sweep-rho: --rho0-list is empty\n");
    return kExitUsage;
  }
  LossConfig probe = a.loss.to_config();
  if (!probe.adaptive()) {
    std::fprintf(stderr, "sweep-rho: --loss must be an adaptive kind\n");
    return kExitUsage;
  }

  const std::string data = resolve_out(a.data);
  require_file(data + "/train.jsonl");
  require_file(data + "/test.jsonl");
  const aps::Dataset ds = aps::load_dataset(data);

  TrainArgs base;
  base.loss = a.loss;
  base.opt = a.opt;
  base.arch = a.arch;
  base.hidden = a.hidden;
  base.epochs = a.epochs;
  base.batch = a.batch;

  std::vector<std::vector<double>> rows;
  std::vector<double> xs, ys;
  for (const double rho0 : rhos) {
    double sum = 0.0, lo = 0.0, hi = 0.0;
    for (int s = 0; s < a.seeds; ++s) {
      TrainArgs ta = base;
      ta.loss.rho0 = rho0;
      ta.seed = a.seed + static_cast<std::uint64_t>(s);
      TrainConfig cfg = to_train_config(ta, ds.cfg.gamma);
      aps::TrainReport rep;
      try {
        rep = aps::train_reward_model(ds, cfg);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "training failed at rho0 %g seed %d: %s\n", rho0, s, e.what());
        return kExitTraining;
      }
      const double acc = last_finite(rep.epochs, &aps::EpochStats::test_acc);
      sum += acc;
      lo = (s == 0) ? acc : std::min(lo, acc);
      hi = (s == 0) ? acc : std::max(hi, acc);
    }
    const double mean = sum / a.seeds;
    rows.push_back({rho0, mean, lo, hi});
    xs.push_back(rho0);
    ys.push_back(mean);
    std::printf("rho0 %-8g mean test acc %.4f (min %.4f, max %.4f)\n", rho0, mean, lo, hi);
  }

  const std::string out = resolve_out(a.out);
  std::filesystem::create_directories(out);
  aps::write_csv(out + "/rho_sweep.csv", {"rho0", "mean_test_acc", "min_test_acc", "max_test_acc"},
                 rows);
  aps::write_line_svg(out + "/rho_sweep.svg", "sensitivity to the robustness radius", "rho0",
                      "mean test accuracy", {{"test_acc", xs, ys}});

  aps::RunManifest m;
  m.command = "sweep-rho";
  m.config = json{{"rho0_list", rhos},
                  {"data", data},
                  {"loss", aps::loss_config_json(probe)},
                  {"optimizer", a.opt.optimizer},
                  {"lr", a.opt.lr},
                  {"arch", a.arch},
                  {"hidden", a.hidden},
                  {"epochs", a.epochs},
                  {"batch", a.batch},
                  {"seeds", a.seeds}};
  m.seed = a.seed;
  m.inputs = {data + "/train.jsonl", data + "/test.jsonl"};
  m.outputs = {"rho_sweep.csv", "rho_sweep.svg"};
  m.wall_seconds = now_seconds(t0);
  aps::write_manifest(out, m);
  std::printf("sweep-rho: wrote %s\n", (out + "/rho_sweep.csv").c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive preference scaling toolkit " + std::string(aps::kVersion)};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "synthesize a labeled preference dataset");
  gen_cmd->add_option("--dim", gen.dim, "feature dimension")->capture_default_str();
  gen_cmd->add_option("--pairs", gen.pairs, "number of pairs before the train/test split")
      ->capture_default_str();
  gen_cmd->add_option("--seg-len", gen.seg_len, "steps per segment")->capture_default_str();
  gen_cmd->add_option("--gamma", gen.gamma, "discount inside a segment")->capture_default_str();
  gen_cmd->add_option("--label-mode", gen.label_mode, "deterministic | stochastic")
      ->check(CLI::IsMember({"deterministic", "stochastic"}))
      ->capture_default_str();
  gen_cmd->add_option("--noise-scale", gen.noise_scale, "label sharpness (stochastic mode)")
      ->capture_default_str();
  gen_cmd->add_option("--tie-eps", gen.tie_eps, "near-tie resample threshold")
      ->capture_default_str();
  gen_cmd->add_option("--test-fraction", gen.test_fraction, "held-out fraction")
      ->capture_default_str();
  gen_cmd->add_option("--truth-arch", gen.truth_arch, "planted truth: linear | mlp2")
      ->check(CLI::IsMember({"linear", "mlp2"}))
      ->capture_default_str();
  gen_cmd->add_option("--truth-hidden", gen.truth_hidden, "planted truth hidden width")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "generation seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output directory")->required();

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "train a reward model on a dataset directory");
  tr_cmd->add_option("--data", tr.data, "dataset directory from gen-data")->required();
  tr.loss.add(tr_cmd);
  tr.opt.add(tr_cmd);
  tr_cmd->add_option("--arch", tr.arch, "model: linear | mlp2")
      ->check(CLI::IsMember({"linear", "mlp2"}))
      ->capture_default_str();
  tr_cmd->add_option("--hidden", tr.hidden, "hidden width (mlp2)")->capture_default_str();
  tr_cmd->add_option("--epochs", tr.epochs, "training epochs")->capture_default_str();
  tr_cmd->add_option("--batch", tr.batch, "minibatch size")->capture_default_str();
  tr_cmd->add_option("--eval-every", tr.eval_every, "accuracy cadence in epochs")
      ->capture_default_str();
  tr_cmd->add_option("--bins", tr.bins, "strength bins in the report")->capture_default_str();
  tr_cmd->add_option("--seed", tr.seed, "init/shuffle seed")->capture_default_str();
  tr_cmd->add_option("--out", tr.out, "output directory")->required();

  std::string suite = "all";
  auto* ver_cmd = app.add_subcommand("verify", "run numerical verification suites");
  ver_cmd->add_option("--suite", suite, "duality | prop1 | prop2 | newton | gradcheck | reparam | all")
      ->capture_default_str();

  AnalyzeArgs an;
  auto* an_cmd = app.add_subcommand("analyze", "emit CSV/SVG analytics from a training report");
  an_cmd->add_option("--report", an.report, "report.json from train or dpo")->required();
  an_cmd->add_option("--out-dir", an.out_dir, "output directory")->required();

  DpoArgs dp;
  auto* dp_cmd = app.add_subcommand("dpo", "train a tabular policy directly from preferences");
  dp_cmd->add_option("--data", dp.data, "preference file from a previous run (else synthesized)");
  dp_cmd->add_option("--states", dp.states, "tabular states (synthesis)")->capture_default_str();
  dp_cmd->add_option("--actions", dp.actions, "tabular actions (synthesis)")
      ->capture_default_str();
  dp_cmd->add_option("--pairs", dp.pairs, "pairs to synthesize")->capture_default_str();
  dp_cmd->add_option("--label-mode", dp.label_mode, "deterministic | stochastic")
      ->check(CLI::IsMember({"deterministic", "stochastic"}))
      ->capture_default_str();
  dp_cmd->add_option("--noise-scale", dp.noise_scale, "label sharpness (stochastic mode)")
      ->capture_default_str();
  dp_cmd->add_option("--data-seed", dp.data_seed, "synthesis seed")->capture_default_str();
  dp.loss.add(dp_cmd);
  dp.opt.add(dp_cmd);
  dp_cmd->add_option("--beta", dp.beta, "inverse temperature of the plain baseline (--loss ce)")
      ->capture_default_str();
  dp_cmd->add_option("--epochs", dp.epochs, "training epochs")->capture_default_str();
  dp_cmd->add_option("--batch", dp.batch, "minibatch size")->capture_default_str();
  dp_cmd->add_option("--eval-every", dp.eval_every, "accuracy cadence in epochs")
      ->capture_default_str();
  dp_cmd->add_option("--bins", dp.bins, "strength bins in the report")->capture_default_str();
  dp_cmd->add_option("--seed", dp.seed, "training seed")->capture_default_str();
  dp_cmd->add_option("--out", dp.out, "output directory")->required();

  AlignArgs al;
  auto* al_cmd = app.add_subcommand(
      "align-study", "train a config grid, select by return vs accuracy, report the gap");
  al_cmd->add_option("--grid", al.grid, "JSON grid file (data + bandit + configs)")->required();
  al_cmd->add_option("--env-seed", al.env_seed, "bandit seed base")->capture_default_str();
  al_cmd->add_option("--seeds", al.seeds, "number of study repetitions")->capture_default_str();
  al_cmd->add_option("--out", al.out, "output directory")->required();

  SweepArgs sw;
  auto* sw_cmd = app.add_subcommand("sweep-rho", "test-accuracy sensitivity to rho0");
  sw_cmd->add_option("--rho0-list", sw.rho0_list, "comma-separated rho0 values")->required();
  sw_cmd->add_option("--data", sw.data, "dataset directory from gen-data")->required();
  sw.loss.add(sw_cmd);
  sw.opt.add(sw_cmd);
  sw_cmd->add_option("--arch", sw.arch, "model: linear | mlp2")
      ->check(CLI::IsMember({"linear", "mlp2"}))
      ->capture_default_str();
  sw_cmd->add_option("--hidden", sw.hidden, "hidden width (mlp2)")->capture_default_str();
  sw_cmd->add_option("--epochs", sw.epochs, "training epochs")->capture_default_str();
  sw_cmd->add_option("--batch", sw.batch, "minibatch size")->capture_default_str();
  sw_cmd->add_option("--seeds", sw.seeds, "seeds per rho0")->capture_default_str();
  sw_cmd->add_option("--seed", sw.seed, "base training seed")->capture_default_str();
  sw_cmd->add_option("--out", sw.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return run_gen_data(gen);
    if (tr_cmd->parsed()) return run_train(tr);
    if (ver_cmd->parsed()) return run_verify(suite);
    if (an_cmd->parsed()) return run_analyze(an);
    if (dp_cmd->parsed()) return run_dpo(dp);
    if (al_cmd->parsed()) return run_align_study(al);
    if (sw_cmd->parsed()) return run_sweep_rho(sw);
  } catch (const MissingFileError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitMissingFile;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitInternal;  // unreachable: require_subcommand guarantees a branch
}
