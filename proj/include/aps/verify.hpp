#pragma once

// Numerical verification suites: each one checks an analytic component of
// the loss/solver stack against an independent brute-force oracle and
// reports the worst observed error against a pinned tolerance.

#include <string>
#include <vector>

namespace aps {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  double worst = 0.0;      // worst observed error or statistic
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
};

// Suites: duality, prop1, prop2, newton, gradcheck, reparam, or "all".
// Throws std::invalid_argument on an unknown suite name.
std::vector<CheckResult> run_verify_suite(const std::string& suite);

const std::vector<std::string>& verify_suite_names();

}  // namespace aps
