#pragma once

#include "aps/loss.hpp"

namespace aps {

struct SolveOptions {
  int iters = 3;          // projected Newton steps
  double init_tau = 1.0;  // feasible by the config invariant tau0 <= 1 <= tau_max
  double grad_tol = 1e-9; // convergence test on the projected gradient
  double zero_delta_eps = 1e-12;
  int bisect_iters = 200;

  void validate() const;
};

struct TauSolveResult {
  double tau = 0.0;
  int iters_used = 0;
  bool converged = false;
  // True only on the two designated fallback paths: the zero-delta shortcut
  // of the linear kind and bisection after a hessian underflow.
  bool used_fallback = false;
};

double project_tau(double tau, const LossConfig& cfg);

// One projected Newton step from tau (diagnostic helper; solve_tau adds a
// bracketing safeguard on top of this update).
double newton_step(double delta, double tau, const LossConfig& cfg);

// Per-pair scale solve: minimizes pair_loss(delta, ., cfg) over the feasible
// tau interval with safeguarded projected Newton.  The tau-gradient is
// strictly increasing in tau, so every evaluation tightens a sign bracket; a
// Newton target is accepted only while it stays inside the bracket and the
// steps shrink fast enough, and anything else becomes a bracket bisection
// (solve_tau in tau.cpp documents the exact acceptance rule).
TauSolveResult solve_tau(double delta, const LossConfig& cfg,
                         const SolveOptions& opt = {});

// Exhaustive scan of tau over [tau0, min(omega_upper, hi)] at the given
// resolution, refined by a golden-section pass around the best cell.  Test
// oracle; deliberately independent of the Newton solver.
double grid_search_tau(double delta, const LossConfig& cfg, double resolution,
                       double hi);

// Finite scan bound that provably contains the minimizer (used for the
// quadratic kind and the dual-side scan, both of which have no tau_max).
double tau_scan_bound(double delta, const LossConfig& cfg);

// Loss at the optimal scale, min over tau of pair_loss, solved to high
// accuracy by scan + golden refinement.
double effective_loss(double delta, const LossConfig& cfg);

// Population-optimal solution for a pair whose true win probability is
// p_star: the optimizer of the expected loss over (delta, tau).
struct TauStar {
  double tau = 0.0;
  double delta = 0.0;
  // Linear kind only: entropy exactly balances the penalty slope, every tau
  // is optimal, and tau/delta are reported at tau0 by convention.
  bool degenerate = false;
};

TauStar tau_star_linear(double p_star, const LossConfig& cfg);
TauStar tau_star_quadratic(double p_star, const LossConfig& cfg);

// Value of the distributionally robust inner maximization over pair-label
// distributions p in the KL ball of radius rho0 around uniform:
//   max_p p1*d1 + p2*d2 - tau0 * KL(p || uniform)  s.t. KL <= rho0.
// Solved by dense scan over p1 with feasibility filtering plus zoom
// refinement (the objective is concave and the feasible set an interval).
double dro_primal_value(double d1, double d2, double tau0, double rho0);

struct DualityGap {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

// Compares the robust primal value against the scalarized dual
//   min_{tau >= tau0} ada_loss_linear(delta, tau) - tau0 * rho0
// with both sides computed by independent scans.
DualityGap dual_check(double delta, double tau0, double rho0);

}  // namespace aps
