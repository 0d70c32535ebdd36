#include "aps/tau.hpp"

#include <algorithm>
#include <cmath>

#include "aps/error.hpp"

namespace aps {
namespace {

// The tau-gradient of both adaptive kinds is strictly increasing in tau, so a
// sign test at the feasible bounds decides boundary minimizers and ordinary
// bisection always converges in between.  These helpers lean on that.

double projected_grad(double g, double tau, double lo, double hi) {
  if (tau <= lo && g > 0.0) return 0.0;
  if (tau >= hi && g < 0.0) return 0.0;
  return g;
}

template <typename F>
double golden_min(F f, double a, double b, double* best_val) {
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
  if (best_val != nullptr) *best_val = std::min(f1, f2);
  return f1 <= f2 ? x1 : x2;
}

TauSolveResult bisect_gradient(double delta, const LossConfig& cfg,
                               const SolveOptions& opt, int newton_iters_done) {
  TauSolveResult res;
  res.used_fallback = true;
  res.iters_used = newton_iters_done;
  res.converged = true;
  const double lo = cfg.tau0;
  const double hi = tau_scan_bound(delta, cfg);
  const double g_lo = grad_hess_tau(delta, lo, cfg).grad;
  const double g_hi = grad_hess_tau(delta, hi, cfg).grad;
  if (g_lo >= 0.0 || g_hi <= 0.0) {
    // No sign change: the minimizer sits on a bound; keep the better value.
    res.tau = pair_loss(delta, lo, cfg) <= pair_loss(delta, hi, cfg) ? lo : hi;
    return res;
  }
  double a = lo, b = hi;
  for (int it = 0; it < opt.bisect_iters && (b - a) > 1e-13 * std::max(1.0, b); ++it) {
    const double mid = 0.5 * (a + b);
    if (grad_hess_tau(delta, mid, cfg).grad > 0.0) {
      b = mid;
    } else {
      a = mid;
    }
  }
  res.tau = 0.5 * (a + b);
  return res;
}

}  // namespace

void SolveOptions::validate() const {
  APS_CHECK(iters >= 0, "SolveOptions: iters must be >= 0");
  APS_CHECK(std::isfinite(init_tau) && init_tau > 0.0, "SolveOptions: init_tau must be > 0");
  APS_CHECK(std::isfinite(grad_tol) && grad_tol > 0.0, "SolveOptions: grad_tol must be > 0");
  APS_CHECK(zero_delta_eps >= 0.0, "SolveOptions: zero_delta_eps must be >= 0");
  APS_CHECK(bisect_iters > 0, "SolveOptions: bisect_iters must be > 0");
}

double project_tau(double tau, const LossConfig& cfg) {
  cfg.validate();
  APS_CHECK(cfg.adaptive(), "project_tau: loss kind has no tau parameter");
  APS_CHECK(!std::isnan(tau), "project_tau: tau is NaN");
  return std::clamp(tau, cfg.tau0, cfg.omega_upper());
}

double newton_step(double delta, double tau, const LossConfig& cfg) {
  const auto [g, h] = grad_hess_tau(delta, tau, cfg);
  if (h == 0.0) {
    // Flat curvature: move to the bound the gradient points away from.
    if (g == 0.0) return project_tau(tau, cfg);
    return g > 0.0 ? cfg.tau0 : project_tau(std::numeric_limits<double>::infinity(), cfg);
  }
  return project_tau(tau - g / h, cfg);
}

TauSolveResult solve_tau(double delta, const LossConfig& cfg, const SolveOptions& opt) {
  cfg.validate();
  opt.validate();
  APS_CHECK(cfg.adaptive(), "solve_tau: loss kind has no tau parameter");
  APS_CHECK(std::isfinite(delta), "solve_tau: non-finite reward difference");
  const double lo = cfg.tau0;
  const double hi = cfg.omega_upper();
  APS_CHECK(opt.init_tau >= lo && opt.init_tau <= hi,
            "solve_tau: init_tau outside the feasible interval");

  TauSolveResult res;

  // Zero-delta shortcut (linear kind): the hessian vanishes identically, the
  // loss reduces to rho0 * tau, and the lower bound is optimal.
  if (cfg.kind == LossKind::AdaptiveLinear && std::abs(delta) < opt.zero_delta_eps) {
    res.tau = lo;
    res.converged = true;
    res.used_fallback = true;
    return res;
  }

  // Sign bracket around the minimizer, tightened by every gradient we see.
  // A Newton step is accepted only while it stays inside the bracket and at
  // least halves the step taken two iterations back; anything else becomes a
  // bracket bisection, so slow ping-pong across a root with lopsided
  // curvature cannot stall.  The decrease test is deliberately lagged by one
  // iteration: comparing against the immediately preceding step rejects sound
  // Newton steps whenever the curvature grows along the path (roots hugging a
  // bound do exactly that) and degrades the whole run to bisection.  The one
  // exception: a target at or past a bound nobody has probed yet hops onto
  // that bound, which is how boundary minimizers are hit exactly (the
  // projected-gradient test then stops there).
  double blo = lo;
  double bhi = cfg.kind == LossKind::AdaptiveLinear
                   ? cfg.tau_max
                   : std::max(opt.init_tau, tau_scan_bound(delta, cfg));
  bool blo_probed = false, bhi_probed = false;
  double tau = opt.init_tau;
  double step = bhi - blo;      // most recent step length
  double step_old = step;       // the one before it; the acceptance yardstick
  for (int k = 0; k < opt.iters; ++k) {
    const auto [g, h] = grad_hess_tau(delta, tau, cfg);
    if (std::abs(projected_grad(g, tau, lo, hi)) <= opt.grad_tol) {
      res.tau = tau;
      res.converged = true;
      return res;
    }
    if (g > 0.0) {
      bhi = std::min(bhi, tau);
      bhi_probed = true;
    } else {
      blo = std::max(blo, tau);
      blo_probed = true;
    }
    if (h <= 0.0) {
      // Curvature underflowed away from the optimum; hand over to bisection.
      return bisect_gradient(delta, cfg, opt, k);
    }
    const double raw = tau - g / h;
    double next;
    if (raw > blo && raw < bhi && std::abs(2.0 * g) <= std::abs(step_old * h)) {
      next = raw;
    } else if (raw <= blo && !blo_probed) {
      next = blo;
    } else if (raw >= bhi && !bhi_probed) {
      next = bhi;
    } else {
      next = 0.5 * (blo + bhi);
    }
    step_old = step;
    step = std::abs(next - tau);
    tau = next;
    res.iters_used = k + 1;
  }
  res.tau = tau;
  const double g_final = grad_hess_tau(delta, tau, cfg).grad;
  res.converged = std::abs(projected_grad(g_final, tau, lo, hi)) <= opt.grad_tol;
  return res;
}

double tau_scan_bound(double delta, const LossConfig& cfg) {
  APS_CHECK(cfg.adaptive(), "tau_scan_bound: loss kind has no tau parameter");
  (void)delta;
  if (cfg.kind == LossKind::AdaptiveLinear) return cfg.tau_max;
  // Quadratic kind: the tau-gradient is phi(u) + 2*rho0*tau - ln 2 with
  // phi in (0, ln 2], hence strictly positive past ln 2 / (2 rho0).
  return std::max(1.0, kLn2 / (2.0 * cfg.rho0)) + 1.0;
}

double grid_search_tau(double delta, const LossConfig& cfg, double resolution, double hi) {
  cfg.validate();
  APS_CHECK(cfg.adaptive(), "grid_search_tau: loss kind has no tau parameter");
  APS_CHECK(std::isfinite(delta), "grid_search_tau: non-finite reward difference");
  APS_CHECK(std::isfinite(resolution) && resolution > 0.0,
            "grid_search_tau: resolution must be > 0");
  APS_CHECK(std::isfinite(hi) && hi > 0.0, "grid_search_tau: hi must be positive and finite");
  const double lo = cfg.tau0;
  const double end = std::min(cfg.omega_upper(), hi);
  APS_CHECK(end >= lo, "grid_search_tau: empty scan interval");

  const auto f = [&](double t) { return pair_loss(delta, t, cfg); };
  double best_t = lo;
  double best_v = f(lo);
  const auto n = static_cast<long long>(std::floor((end - lo) / resolution));
  for (long long k = 1; k <= n; ++k) {
    const double t = lo + static_cast<double>(k) * resolution;
    const double v = f(t);
    if (v < best_v) {
      best_v = v;
      best_t = t;
    }
  }
  if (const double v_end = f(end); v_end < best_v) {
    best_v = v_end;
    best_t = end;
  }
  const double a = std::max(lo, best_t - resolution);
  const double b = std::min(end, best_t + resolution);
  double refined_v = 0.0;
  const double refined_t = golden_min(f, a, b, &refined_v);
  return refined_v < best_v ? refined_t : best_t;
}

double effective_loss(double delta, const LossConfig& cfg) {
  cfg.validate();
  if (!cfg.adaptive()) return pair_loss(delta, 1.0, cfg);
  const double hi = tau_scan_bound(delta, cfg);
  const double res = std::max(1e-3, (hi - cfg.tau0) / 5000.0);
  const double tau = grid_search_tau(delta, cfg, res, hi);
  return pair_loss(delta, tau, cfg);
}

TauStar tau_star_linear(double p_star, const LossConfig& cfg) {
  cfg.validate();
  APS_CHECK(cfg.kind == LossKind::AdaptiveLinear, "tau_star_linear: wrong loss kind");
  const double entropy = binary_entropy(p_star);
  const double c = entropy + cfg.rho();
  TauStar out;
  if (std::abs(c) <= 1e-14) {
    // Entropy exactly offsets the penalty slope: the expected loss is
    // constant in tau and every scale is optimal.
    out.degenerate = true;
    out.tau = cfg.tau0;
  } else {
    out.tau = c > 0.0 ? cfg.tau0 : cfg.tau_max;
  }
  out.delta = out.tau * logit(p_star);
  return out;
}

TauStar tau_star_quadratic(double p_star, const LossConfig& cfg) {
  cfg.validate();
  APS_CHECK(cfg.kind == LossKind::AdaptiveQuadratic, "tau_star_quadratic: wrong loss kind");
  const double entropy = binary_entropy(p_star);
  TauStar out;
  out.tau = std::max(cfg.tau0, (kLn2 - entropy) / (2.0 * cfg.rho0));
  out.delta = out.tau * logit(p_star);
  return out;
}

namespace {

// KL(p || uniform) over two outcomes, with the 0 log 0 = 0 convention.
double kl_to_uniform(double p1) {
  const double p2 = 1.0 - p1;
  double kl = 0.0;
  if (p1 > 0.0) kl += p1 * std::log(2.0 * p1);
  if (p2 > 0.0) kl += p2 * std::log(2.0 * p2);
  return kl;
}

// Boundary of {KL <= rho0} on one side of 1/2, found by bisection.
double kl_boundary(double inside, double outside, double rho0) {
  double a = inside, b = outside;  // KL(a) <= rho0 < KL(b)
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (a + b);
    if (kl_to_uniform(mid) <= rho0) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return a;
}

}  // namespace

double dro_primal_value(double d1, double d2, double tau0, double rho0) {
  APS_CHECK(std::isfinite(d1) && std::isfinite(d2), "dro_primal_value: non-finite payoff");
  APS_CHECK(std::isfinite(tau0) && tau0 > 0.0, "dro_primal_value: tau0 must be > 0");
  APS_CHECK(std::isfinite(rho0) && rho0 > 0.0, "dro_primal_value: rho0 must be > 0");

  double p_lo = 0.0, p_hi = 1.0;
  if (rho0 < kLn2) {  // KL(0) = KL(1) = ln 2, so the ball is a strict interval
    p_lo = kl_boundary(0.5, 0.0, rho0);
    p_hi = kl_boundary(0.5, 1.0, rho0);
  }
  const auto f = [&](double p1) { return p1 * d1 + (1.0 - p1) * d2 - tau0 * kl_to_uniform(p1); };

  // Dense scan of the feasible interval followed by zoom refinement.  The
  // objective is concave (linear minus tau0 * convex) on an interval, so the
  // coarse-to-fine scan cannot lose the maximizer.
  double a = p_lo, b = p_hi;
  double best_p = 0.5, best_v = f(0.5);
  int points = 20000;
  for (int round = 0; round < 12 && (b - a) > 1e-13; ++round) {
    const double step = (b - a) / points;
    int best_k = -1;
    for (int k = 0; k <= points; ++k) {
      const double p = k == points ? b : a + step * k;
      const double v = f(p);
      if (v > best_v) {
        best_v = v;
        best_p = p;
        best_k = k;
      }
    }
    const double center = best_k >= 0 ? best_p : std::clamp(best_p, a, b);
    a = std::max(p_lo, center - step);
    b = std::min(p_hi, center + step);
    points = 64;
  }
  return best_v;
}

DualityGap dual_check(double delta, double tau0, double rho0) {
  APS_CHECK(std::isfinite(delta), "dual_check: non-finite reward difference");
  DualityGap out;
  // Robust side: the winner orientation pays r(loser) - r(winner) = -delta
  // when the comparison is upheld and 0 when it is flipped.
  out.primal = dro_primal_value(-delta, 0.0, tau0, rho0);

  // Scalarized side: tau has no upper bound, so scan far enough that the
  // stationary point (proportional to |delta|) is always interior.
  const double hi = std::max(10.0, 10.0 * std::abs(delta));
  LossConfig cfg;
  cfg.kind = LossKind::AdaptiveLinear;
  cfg.tau0 = tau0;
  cfg.tau_max = hi;
  cfg.rho0 = rho0;
  const double res = std::max(1e-3, (hi - tau0) / 50000.0);
  const double tau = grid_search_tau(delta, cfg, res, hi);
  out.dual = ada_loss_linear(delta, tau, cfg) - tau0 * rho0;
  out.gap = std::abs(out.primal - out.dual);
  return out;
}

}  // namespace aps
