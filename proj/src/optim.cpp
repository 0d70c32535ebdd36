#include "aps/optim.hpp"

#include <cmath>

#include "aps/error.hpp"
#include "aps/kernels.hpp"

namespace aps {

const char* opt_kind_name(OptKind kind) {
  switch (kind) {
    case OptKind::Sgd: return "sgd";
    case OptKind::Adam: return "adam";
  }
  fail_precondition("opt_kind_name: bad enum value");
}

OptKind opt_kind_from_name(const std::string& name) {
  if (name == "sgd") return OptKind::Sgd;
  if (name == "adam") return OptKind::Adam;
  fail_precondition("unknown optimizer '" + name + "' (expected sgd or adam)");
}

void OptConfig::validate() const {
  APS_CHECK(std::isfinite(lr) && lr > 0.0, "OptConfig: lr must be > 0");
  APS_CHECK(beta1 >= 0.0 && beta1 < 1.0, "OptConfig: beta1 must lie in [0, 1)");
  APS_CHECK(beta2 >= 0.0 && beta2 < 1.0, "OptConfig: beta2 must lie in [0, 1)");
  APS_CHECK(std::isfinite(eps) && eps > 0.0, "OptConfig: eps must be > 0");
}

Optimizer::Optimizer(const OptConfig& cfg, std::size_t n_params) : cfg_(cfg) {
  cfg.validate();
  if (cfg.kind == OptKind::Adam) {
    m_.assign(n_params, 0.0);
    v_.assign(n_params, 0.0);
  }
}

void Optimizer::step(std::vector<double>& params, const std::vector<double>& grad) {
  APS_CHECK(params.size() == grad.size(), "Optimizer::step: size mismatch");
  if (cfg_.kind == OptKind::Adam) {
    APS_CHECK(params.size() == m_.size(), "Optimizer::step: wrong parameter count");
  }
  for (const double g : grad) {
    APS_REQUIRE(std::isfinite(g), "Optimizer::step: non-finite gradient");
  }
  const auto& k = kernels::active();
  ++t_;
  if (cfg_.kind == OptKind::Sgd) {
    k.axpy(-cfg_.lr, grad.data(), params.data(), params.size());
    return;
  }
  const double bias1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bias2 = 1.0 - std::pow(cfg_.beta2, t_);
  k.adam_update(params.data(), grad.data(), m_.data(), v_.data(), params.size(),
                cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps, bias1, bias2);
}

}  // namespace aps
