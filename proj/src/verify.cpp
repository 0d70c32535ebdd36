#include "aps/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "aps/dpo.hpp"
#include "aps/error.hpp"
#include "aps/loss.hpp"
#include "aps/model.hpp"
#include "aps/tau.hpp"

namespace aps {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Local golden-section minimizer.  The verify suites keep their own copy on
// purpose: the oracles here must not share code with the solver under test.
template <typename F>
double golden_min(F f, double a, double b) {
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-12; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

// Relative error with an absolute floor of one, so near-zero derivatives are
// compared absolutely instead of blowing up the ratio.
double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

CheckResult make_result(std::string suite, std::string name, double worst, double tol,
                        double seconds, std::string detail) {
  CheckResult r;
  r.suite = std::move(suite);
  r.name = std::move(name);
  r.worst = worst;
  r.tolerance = tol;
  r.passed = worst <= tol;
  r.seconds = seconds;
  r.detail = std::move(detail);
  return r;
}

// ---------------------------------------------------------------------------
// duality: worst-case two-point reweighting vs the scalarized scale problem.

std::vector<CheckResult> suite_duality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(0x64756131ull);
  std::uniform_real_distribution<double> draw_tau0(0.05, 1.0);
  std::uniform_real_distribution<double> draw_rho0(0.05, 1.0);
  double worst = 0.0;
  int points = 0;
  for (int c = 0; c < 10; ++c) {
    const double tau0 = draw_tau0(rng);
    const double rho0 = draw_rho0(rng);
    for (int d = -20; d <= 20; ++d) {
      const DualityGap g = dual_check(static_cast<double>(d), tau0, rho0);
      worst = std::max(worst, g.gap);
      ++points;
    }
  }
  std::ostringstream detail;
  detail << points << " (difference, config) points, ball radii up to 1.0";
  return {make_result("duality", "reweighting value equals scale-problem value", worst, 1e-5,
                      elapsed(t0), detail.str())};
}

// ---------------------------------------------------------------------------
// prop1 / prop2: closed-form optimal scale vs 2-D grid minimization of the
// population loss  p * loss(delta) + (1-p) * loss(-delta)  over (tau, delta).

struct GridOpt {
  double tau;
  double delta;
};

double population_loss(double p, double delta, double tau, const LossConfig& cfg) {
  return p * pair_loss(delta, tau, cfg) + (1.0 - p) * pair_loss(-delta, tau, cfg);
}

// Scans tau at the given resolution, minimizing over delta by golden section
// at every grid point (the population loss is strictly convex in delta), then
// refines tau inside the winning cell.
GridOpt grid_population_opt(double p, const LossConfig& cfg, double tau_hi, double step) {
  const auto inner = [&](double tau) {
    const double d = golden_min([&](double x) { return population_loss(p, x, tau, cfg); },
                                -40.0, 40.0);
    return population_loss(p, d, tau, cfg);
  };
  double best_tau = cfg.tau0;
  double best_val = inner(best_tau);
  const auto n = static_cast<long long>(std::floor((tau_hi - cfg.tau0) / step));
  for (long long k = 1; k <= n; ++k) {
    const double tau = cfg.tau0 + static_cast<double>(k) * step;
    const double v = inner(tau);
    if (v < best_val) {
      best_val = v;
      best_tau = tau;
    }
  }
  if (const double v = inner(tau_hi); v < best_val) {
    best_val = v;
    best_tau = tau_hi;
  }
  const double a = std::max(cfg.tau0, best_tau - step);
  const double b = std::min(tau_hi, best_tau + step);
  GridOpt out;
  out.tau = golden_min(inner, a, b);
  if (inner(best_tau) < inner(out.tau)) out.tau = best_tau;
  out.delta = golden_min([&](double x) { return population_loss(p, x, out.tau, cfg); },
                         -40.0, 40.0);
  return out;
}

std::vector<double> probability_grid() {
  std::vector<double> ps(50);
  for (int i = 0; i < 50; ++i) ps[i] = 0.02 + 0.96 * i / 49.0;
  return ps;
}

// Probability above 1/2 where the binary entropy equals ln 2 - rho0 (the
// boundary between floor-scale and ceiling-scale regimes of the linear kind).
double entropy_switch_point(double rho0) {
  const double target = kLn2 - rho0;
  double a = 0.5, b = 1.0 - 1e-12;  // entropy decreases from ln 2 to ~0
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (binary_entropy(mid) > target) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

std::vector<CheckResult> suite_prop1() {
  const auto t0 = Clock::now();
  LossConfig cfg;
  cfg.kind = LossKind::AdaptiveLinear;
  cfg.tau0 = 0.1;
  cfg.tau_max = 5.0;
  cfg.rho0 = 0.1;

  const std::vector<double> ps = probability_grid();
  std::vector<double> grid_tau(ps.size());
  double worst_tau = 0.0, worst_delta = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const GridOpt g = grid_population_opt(ps[i], cfg, cfg.tau_max, 0.01);
    const TauStar cf = tau_star_linear(ps[i], cfg);
    grid_tau[i] = g.tau;
    worst_tau = std::max(worst_tau, std::abs(g.tau - cf.tau));
    worst_delta = std::max(worst_delta, std::abs(g.delta - cf.delta));
  }

  // The closed form predicts floor scale at mid probabilities and ceiling
  // scale at extreme ones; both regime boundaries must land inside the grid
  // interval where the oracle's minimizer jumps.
  const double p_hi = entropy_switch_point(cfg.rho0);
  const double p_lo = 1.0 - p_hi;
  const double mid = 0.5 * (cfg.tau0 + cfg.tau_max);
  bool lo_ok = false, hi_ok = false;
  for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
    if (grid_tau[i] > mid && grid_tau[i + 1] < mid) {
      lo_ok = ps[i] <= p_lo && p_lo <= ps[i + 1];
    }
    if (grid_tau[i] < mid && grid_tau[i + 1] > mid) {
      hi_ok = ps[i] <= p_hi && p_hi <= ps[i + 1];
    }
  }
  std::ostringstream sw;
  sw << "regime boundaries at p = " << p_lo << " and " << p_hi;

  const double sec = elapsed(t0);
  return {
      make_result("prop1", "closed-form scale matches grid minimizer", worst_tau, 1e-3, sec,
                  "50 probabilities in [0.02, 0.98]"),
      make_result("prop1", "closed-form difference matches grid minimizer", worst_delta, 1e-2,
                  sec, "same sweep"),
      make_result("prop1", "scale switch bracketed by grid", (lo_ok && hi_ok) ? 0.0 : 1.0, 0.5,
                  sec, sw.str()),
  };
}

std::vector<CheckResult> suite_prop2() {
  const auto t0 = Clock::now();
  LossConfig cfg;
  cfg.kind = LossKind::AdaptiveQuadratic;
  cfg.tau0 = 0.1;
  cfg.rho0 = 0.1;

  const double tau_hi = tau_scan_bound(1.0, cfg);
  double worst_tau = 0.0, worst_delta = 0.0;
  for (const double p : probability_grid()) {
    const GridOpt g = grid_population_opt(p, cfg, tau_hi, 0.01);
    const TauStar cf = tau_star_quadratic(p, cfg);
    worst_tau = std::max(worst_tau, std::abs(g.tau - cf.tau));
    worst_delta = std::max(worst_delta, std::abs(g.delta - cf.delta));
  }

  const double spot_cf = tau_star_quadratic(0.95, cfg).tau;
  const double spot_grid = grid_population_opt(0.95, cfg, tau_hi, 0.01).tau;
  const double spot_err =
      std::max(std::abs(spot_cf - 2.4732), std::abs(spot_grid - 2.4732));

  const double sec = elapsed(t0);
  return {
      make_result("prop2", "closed-form scale matches grid minimizer", worst_tau, 1e-3, sec,
                  "50 probabilities in [0.02, 0.98]"),
      make_result("prop2", "closed-form difference matches grid minimizer", worst_delta, 1e-2,
                  sec, "same sweep"),
      make_result("prop2", "spot value at p = 0.95", spot_err, 1e-3, sec,
                  "closed form and grid vs 2.4732"),
  };
}

// ---------------------------------------------------------------------------
// newton: the damped projected solver vs an exhaustive scan, over random
// problem instances of both adaptive kinds.

std::vector<CheckResult> suite_newton() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(0x6e65777431ull);
  std::uniform_real_distribution<double> draw_tau0(0.05, 1.0);
  std::uniform_real_distribution<double> draw_tau_max(1.0, 10.0);
  std::uniform_real_distribution<double> draw_rho0(0.05, 1.0);
  std::uniform_real_distribution<double> draw_delta(-10.0, 10.0);

  double worst10 = 0.0;
  std::vector<double> err3;
  err3.reserve(1000);
  int fallbacks = 0;
  for (int i = 0; i < 1000; ++i) {
    LossConfig cfg;
    cfg.kind = (i % 2 == 0) ? LossKind::AdaptiveLinear : LossKind::AdaptiveQuadratic;
    cfg.tau0 = draw_tau0(rng);
    cfg.tau_max = draw_tau_max(rng);
    cfg.rho0 = draw_rho0(rng);
    const double delta = draw_delta(rng);

    const double hi = tau_scan_bound(delta, cfg);
    const double truth = grid_search_tau(delta, cfg, 1e-3, hi);

    SolveOptions opt;
    opt.init_tau = std::clamp(1.0, cfg.tau0, cfg.omega_upper());
    opt.iters = 10;
    const TauSolveResult r10 = solve_tau(delta, cfg, opt);
    opt.iters = 3;
    const TauSolveResult r3 = solve_tau(delta, cfg, opt);

    worst10 = std::max(worst10, std::abs(r10.tau - truth));
    err3.push_back(std::abs(r3.tau - truth));
    if (std::abs(delta) >= 1e-12 && (r10.used_fallback || r3.used_fallback)) ++fallbacks;
  }
  std::nth_element(err3.begin(), err3.begin() + err3.size() / 2, err3.end());
  const double median3 = err3[err3.size() / 2];

  LossConfig zero_cfg;  // defaults: linear kind
  const TauSolveResult zr = solve_tau(0.0, zero_cfg, SolveOptions{});
  const double zero_err =
      (zr.used_fallback && zr.tau == zero_cfg.tau0) ? 0.0 : 1.0;

  const double sec = elapsed(t0);
  return {
      make_result("newton", "ten-step solve matches scan", worst10, 1e-3, sec,
                  "1000 random instances, both adaptive kinds"),
      make_result("newton", "three-step median error", median3, 1e-3, sec, "same instances"),
      make_result("newton", "no fallback away from zero difference",
                  static_cast<double>(fallbacks), 0.0, sec, "count of offending instances"),
      make_result("newton", "zero difference routes to the floor scale", zero_err, 0.5, sec,
                  "fallback flag plus exact floor"),
  };
}

// ---------------------------------------------------------------------------
// gradcheck: every analytic derivative in the stack vs central differences.

std::vector<CheckResult> suite_gradcheck() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(0x677261646bull);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  int probes = 0;
  double worst_shallow = 0.0;  // closed-form expressions, tolerance 1e-5
  double worst_deep = 0.0;     // multi-layer backprop coordinates, tolerance 1e-4

  const auto random_cfg = [&](LossKind kind) {
    LossConfig cfg;
    cfg.kind = kind;
    cfg.tau0 = 0.05 + 0.95 * unit(rng);
    cfg.tau_max = cfg.tau0 + 1.0 + 8.0 * unit(rng);
    cfg.rho0 = 0.05 + 0.95 * unit(rng);
    return cfg;
  };

  // d loss / d difference for all four kinds, at fixed scale.
  const LossKind kinds[] = {LossKind::CrossEntropy, LossKind::AdaptiveLinear,
                            LossKind::AdaptiveQuadratic, LossKind::Hinge};
  for (int i = 0; i < 320; ++i) {
    LossConfig cfg = random_cfg(kinds[i % 4]);
    double delta = -8.0 + 16.0 * unit(rng);
    if (cfg.kind == LossKind::Hinge) {
      while (std::abs(delta - cfg.hinge_margin) < 1e-2) delta = -8.0 + 16.0 * unit(rng);
    }
    const double tau = cfg.adaptive()
                           ? cfg.tau0 + (std::min(cfg.omega_upper(), 6.0) - cfg.tau0) * unit(rng)
                           : 1.0;
    const double h = 1e-6 * std::max(1.0, std::abs(delta));
    const double fd = (pair_loss(delta + h, tau, cfg) - pair_loss(delta - h, tau, cfg)) / (2 * h);
    worst_shallow = std::max(worst_shallow, rel_err(grad_delta(delta, tau, cfg), fd));
    ++probes;
  }

  // d loss / d scale and its second derivative for the adaptive kinds.  The
  // second derivative is differenced from the verified first derivative (a
  // loss-only second difference would drown in rounding at this tolerance).
  for (int i = 0; i < 300; ++i) {
    LossConfig cfg = random_cfg(i % 2 == 0 ? LossKind::AdaptiveLinear
                                           : LossKind::AdaptiveQuadratic);
    const double delta = -8.0 + 16.0 * unit(rng);
    const double tau = 0.05 + 5.95 * unit(rng);
    const double h = 1e-6 * std::max(1.0, tau);
    const auto at = [&](double t) { return grad_hess_tau(delta, t, cfg); };
    const double fd_g = (pair_loss(delta, tau + h, cfg) - pair_loss(delta, tau - h, cfg)) / (2 * h);
    const double fd_h = (at(tau + h).grad - at(tau - h).grad) / (2 * h);
    const auto [g, hess] = at(tau);
    worst_shallow = std::max({worst_shallow, rel_err(g, fd_g), rel_err(hess, fd_h)});
    probes += 2;
  }

  // Full-model backprop through discounted segment sums, both architectures.
  const auto backprop_probe = [&](const ModelConfig& mc, int n_models, int n_coords,
                                  double& worst) {
    std::uniform_int_distribution<std::size_t> coord(0, mc.param_count() - 1);
    const double gamma = 0.97;
    for (int m = 0; m < n_models; ++m) {
      RewardModel model(mc, 1000 + static_cast<std::uint64_t>(m));
      Segment w, l;
      w.length = l.length = 2;
      w.x.resize(2 * static_cast<std::size_t>(mc.input_dim));
      l.x.resize(w.x.size());
      for (auto& v : w.x) v = gauss(rng);
      for (auto& v : l.x) v = gauss(rng);

      std::vector<double> grad(mc.param_count(), 0.0);
      model.accumulate_pair_grad(w, l, gamma, 1.0, grad);
      for (int c = 0; c < n_coords; ++c) {
        const std::size_t k = coord(rng);
        const double saved = model.params()[k];
        const double h = 1e-5 * std::max(1.0, std::abs(saved));
        model.params()[k] = saved + h;
        const double up = model.pair_delta(w, l, gamma);
        model.params()[k] = saved - h;
        const double dn = model.pair_delta(w, l, gamma);
        model.params()[k] = saved;
        worst = std::max(worst, rel_err(grad[k], (up - dn) / (2 * h)));
        ++probes;
      }
    }
  };
  ModelConfig lin;
  lin.arch = ModelArch::Linear;
  lin.input_dim = 7;
  backprop_probe(lin, 40, 5, worst_shallow);
  ModelConfig deep;
  deep.arch = ModelArch::Mlp2;
  deep.input_dim = 5;
  deep.hidden = 8;
  backprop_probe(deep, 30, 7, worst_deep);

  // Both preference-policy objectives, probed on tabular logits.
  const int S = 6, A = 5;
  std::uniform_int_distribution<int> draw_s(0, S - 1), draw_a(0, A - 1);
  SolveOptions precise;
  precise.iters = 25;
  precise.grad_tol = 1e-12;
  LossConfig ada;  // default linear-adaptive config
  const double betas[] = {0.5, 1.0, 2.0};
  for (int inst = 0; inst < 30; ++inst) {
    TabularPolicy pol = TabularPolicy::uniform(S, A);
    TabularPolicy ref = TabularPolicy::uniform(S, A);
    for (auto& v : pol.logits) v = gauss(rng);
    for (auto& v : ref.logits) v = gauss(rng);
    std::vector<DpoPair> pairs(40);
    for (auto& pr : pairs) {
      pr.s = draw_s(rng);
      pr.a_w = draw_a(rng);
      do {
        pr.a_l = draw_a(rng);
      } while (pr.a_l == pr.a_w);
    }
    const double beta = betas[inst % 3];
    std::vector<double> g_dpo(pol.logits.size(), 0.0), g_ada(pol.logits.size(), 0.0);
    dpo_grad(pol, ref, pairs, beta, g_dpo);
    ada_dpo_grad(pol, ref, pairs, ada, precise, g_ada);
    std::uniform_int_distribution<std::size_t> coord(0, pol.logits.size() - 1);
    for (int c = 0; c < 5; ++c) {
      const std::size_t k = coord(rng);
      const double saved = pol.logits[k];
      const double h = 1e-6;
      pol.logits[k] = saved + h;
      const double up_d = dpo_loss(pol, ref, pairs, beta);
      const double up_a = ada_dpo_loss(pol, ref, pairs, ada, precise);
      pol.logits[k] = saved - h;
      const double dn_d = dpo_loss(pol, ref, pairs, beta);
      const double dn_a = ada_dpo_loss(pol, ref, pairs, ada, precise);
      pol.logits[k] = saved;
      worst_shallow = std::max(worst_shallow, rel_err(g_dpo[k], (up_d - dn_d) / (2 * h)));
      worst_shallow = std::max(worst_shallow, rel_err(g_ada[k], (up_a - dn_a) / (2 * h)));
      probes += 2;
    }
  }

  const double sec = elapsed(t0);
  std::ostringstream detail;
  detail << probes << " central-difference probes";
  return {
      make_result("gradcheck", "closed-form derivatives match differences", worst_shallow, 1e-5,
                  sec, detail.str()),
      make_result("gradcheck", "deep backprop coordinates match differences", worst_deep, 1e-4,
                  sec, "two-hidden-layer model"),
  };
}

// ---------------------------------------------------------------------------
// reparam: reward recovered from its induced policy via the log-ratio
// identity, exact partition sums.

std::vector<CheckResult> suite_reparam() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(0x7265706172ull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.5, 3.0);
  std::uniform_int_distribution<int> dims(2, 20);
  const double betas[] = {0.1, 1.0, 10.0};

  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int S = dims(rng), A = dims(rng);
    std::vector<double> r(static_cast<std::size_t>(S) * A);
    const double amp = scale(rng);
    for (auto& v : r) v = amp * gauss(rng);
    TabularPolicy ref = TabularPolicy::uniform(S, A);
    for (auto& v : ref.logits) v = gauss(rng);
    worst = std::max(worst, reparam_error(r, ref, betas[i % 3], S, A));
  }
  return {make_result("reparam", "policy log-ratio identity recovers rewards", worst, 1e-9,
                      elapsed(t0), "100 random tabular instances, sizes up to 20x20")};
}

}  // namespace

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names = {"duality", "prop1",     "prop2",  "newton",
                                                 "gradcheck", "reparam", "all"};
  return names;
}

std::vector<CheckResult> run_verify_suite(const std::string& suite) {
  if (suite == "duality") return suite_duality();
  if (suite == "prop1") return suite_prop1();
  if (suite == "prop2") return suite_prop2();
  if (suite == "newton") return suite_newton();
  if (suite == "gradcheck") return suite_gradcheck();
  if (suite == "reparam") return suite_reparam();
  if (suite == "all") {
    std::vector<CheckResult> all;
    for (const auto& name : verify_suite_names()) {
      if (name == "all") continue;
      auto part = run_verify_suite(name);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  throw std::invalid_argument("unknown verify suite: " + suite);
}

}  // namespace aps
