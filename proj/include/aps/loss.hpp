#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "aps/math.hpp"

namespace aps {

// Preference loss families over the learned reward difference delta of a
// (winner, loser) pair.  The adaptive kinds add an instance-level scaling
// factor tau with a linear or quadratic penalty:
//
//   adaptive linear     -tau * log_sigmoid(delta / tau) + (rho0 - ln 2) * tau,
//                       tau in [tau0, tau_max]
//   adaptive quadratic  -tau * log_sigmoid(delta / tau) + rho0 * tau^2 - ln 2 * tau,
//                       tau in [tau0, inf)
//
// With tau0 = tau_max = 1 and rho0 = ln 2 the linear kind degenerates to the
// plain cross-entropy loss exactly (same floating-point results).
enum class LossKind { CrossEntropy, AdaptiveLinear, AdaptiveQuadratic, Hinge };

const char* loss_kind_name(LossKind kind);
LossKind loss_kind_from_name(const std::string& name);

struct LossConfig {
  LossKind kind = LossKind::AdaptiveLinear;
  double tau0 = 0.1;
  double tau_max = 5.0;  // upper scale bound; the quadratic kind ignores it
  double rho0 = 0.1;
  double hinge_margin = 1.0;

  void validate() const;
  bool adaptive() const {
    return kind == LossKind::AdaptiveLinear || kind == LossKind::AdaptiveQuadratic;
  }
  // Effective slope of the linear-kind penalty.
  double rho() const { return rho0 - kLn2; }
  // Upper end of the feasible tau interval.
  double omega_upper() const {
    return kind == LossKind::AdaptiveQuadratic
               ? std::numeric_limits<double>::infinity()
               : tau_max;
  }
};

// Probability that the pair is ordered correctly under the scaled
// Bradley-Terry model.
double bt_probability(double delta, double tau);

double ce_loss(double delta);
double hinge_loss(double delta, double margin);
double ada_loss_linear(double delta, double tau, const LossConfig& cfg);
double ada_loss_quadratic(double delta, double tau, const LossConfig& cfg);

// Loss of one pair at a fixed scale (tau is ignored by the cross-entropy and
// hinge kinds).
double pair_loss(double delta, double tau, const LossConfig& cfg);

// d pair_loss / d delta at fixed tau.  For the hinge kind this is the
// subgradient that is zero once delta reaches the margin.
double grad_delta(double delta, double tau, const LossConfig& cfg);

struct GradHess {
  double grad;
  double hess;
};

// First and second derivative of the adaptive losses with respect to tau.
// Rejects the non-adaptive kinds.
GradHess grad_hess_tau(double delta, double tau, const LossConfig& cfg);

}  // namespace aps
