#include "aps/loss.hpp"

#include <cmath>

#include "aps/error.hpp"

namespace aps {
namespace {

void check_delta(double delta) {
  APS_CHECK(std::isfinite(delta), "loss: non-finite reward difference");
}

// The losses are well defined for every positive scale; membership in the
// feasible interval is the solver's contract, not the evaluator's (finite
// differences and the dual-side scans all evaluate off the interval).
void check_tau(double tau, const LossConfig&) {
  APS_CHECK(std::isfinite(tau) && tau > 0.0, "loss: tau must be positive and finite");
}

}  // namespace

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::CrossEntropy: return "ce";
    case LossKind::AdaptiveLinear: return "ada-lin";
    case LossKind::AdaptiveQuadratic: return "ada-quad";
    case LossKind::Hinge: return "hinge";
  }
  fail_precondition("loss_kind_name: bad enum value");
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "ce") return LossKind::CrossEntropy;
  if (name == "ada-lin") return LossKind::AdaptiveLinear;
  if (name == "ada-quad") return LossKind::AdaptiveQuadratic;
  if (name == "hinge") return LossKind::Hinge;
  fail_precondition("unknown loss kind '" + name + "' (expected ce, ada-lin, ada-quad, or hinge)");
}

void LossConfig::validate() const {
  APS_CHECK(std::isfinite(rho0) && rho0 > 0.0, "LossConfig: rho0 must be > 0");
  if (adaptive()) {
    APS_CHECK(std::isfinite(tau0) && tau0 > 0.0, "LossConfig: tau0 must be > 0");
    // Keeps the Newton initializer tau=1 feasible for every config.
    APS_CHECK(tau0 <= 1.0, "LossConfig: tau0 must be <= 1");
    if (kind == LossKind::AdaptiveLinear) {
      APS_CHECK(std::isfinite(tau_max) && tau_max >= 1.0, "LossConfig: tau_max must be >= 1");
      APS_CHECK(tau0 <= tau_max, "LossConfig: tau0 must be <= tau_max");
    }
  }
  if (kind == LossKind::Hinge) {
    APS_CHECK(std::isfinite(hinge_margin) && hinge_margin > 0.0,
              "LossConfig: hinge margin must be > 0");
  }
}

double bt_probability(double delta, double tau) {
  check_delta(delta);
  APS_CHECK(std::isfinite(tau) && tau > 0.0, "bt_probability: tau must be positive");
  return sigmoid(delta / tau);
}

double ce_loss(double delta) {
  check_delta(delta);
  return -log_sigmoid(delta);
}

double hinge_loss(double delta, double margin) {
  check_delta(delta);
  APS_CHECK(std::isfinite(margin) && margin > 0.0, "hinge_loss: margin must be > 0");
  return std::max(0.0, margin - delta);
}

double ada_loss_linear(double delta, double tau, const LossConfig& cfg) {
  check_delta(delta);
  check_tau(tau, cfg);
  return -tau * log_sigmoid(delta / tau) + cfg.rho() * tau;
}

double ada_loss_quadratic(double delta, double tau, const LossConfig& cfg) {
  check_delta(delta);
  check_tau(tau, cfg);
  return -tau * log_sigmoid(delta / tau) + cfg.rho0 * (tau * tau) - kLn2 * tau;
}

double pair_loss(double delta, double tau, const LossConfig& cfg) {
  switch (cfg.kind) {
    case LossKind::CrossEntropy: return ce_loss(delta);
    case LossKind::Hinge: return hinge_loss(delta, cfg.hinge_margin);
    case LossKind::AdaptiveLinear: return ada_loss_linear(delta, tau, cfg);
    case LossKind::AdaptiveQuadratic: return ada_loss_quadratic(delta, tau, cfg);
  }
  fail_precondition("pair_loss: bad loss kind");
}

double grad_delta(double delta, double tau, const LossConfig& cfg) {
  check_delta(delta);
  // sigmoid(x) - 1 is written as -sigmoid(-x): the direct form rounds to
  // zero past x ~ 37 while the flipped form keeps the tail.
  switch (cfg.kind) {
    case LossKind::CrossEntropy:
      return -sigmoid(-delta);
    case LossKind::Hinge:
      return delta >= cfg.hinge_margin ? 0.0 : -1.0;
    case LossKind::AdaptiveLinear:
    case LossKind::AdaptiveQuadratic:
      check_tau(tau, cfg);
      return -sigmoid(-delta / tau);
  }
  fail_precondition("grad_delta: bad loss kind");
}

GradHess grad_hess_tau(double delta, double tau, const LossConfig& cfg) {
  APS_CHECK(cfg.adaptive(), "grad_hess_tau: loss kind has no tau parameter");
  check_delta(delta);
  check_tau(tau, cfg);
  const double u = delta / tau;
  const double s = sigmoid(u);
  const double sm = sigmoid(-u);  // 1 - s without the catastrophic rounding
  // d/dtau of -tau*log_sigmoid(delta/tau): the chain terms collapse to
  // -log_sigmoid(u) + u*(1 - sigmoid(u)).
  const double base_grad = -log_sigmoid(u) + u * sm;
  const double base_hess = (u * u / tau) * s * sm;
  if (cfg.kind == LossKind::AdaptiveLinear) {
    return {base_grad + cfg.rho(), base_hess};
  }
  return {base_grad + 2.0 * cfg.rho0 * tau - kLn2, base_hess + 2.0 * cfg.rho0};
}

}  // namespace aps
