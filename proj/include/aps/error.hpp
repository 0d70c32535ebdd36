#pragma once

#include <stdexcept>
#include <string>

namespace aps {

// Precondition violations (bad arguments, malformed configs) throw
// invalid_argument; runtime failures (I/O, divergence) throw runtime_error.
[[noreturn]] inline void fail_precondition(const std::string& msg) {
  throw std::invalid_argument(msg);
}

[[noreturn]] inline void fail_runtime(const std::string& msg) {
  throw std::runtime_error(msg);
}

}  // namespace aps

#define APS_CHECK(cond, msg)                  \
  do {                                        \
    if (!(cond)) ::aps::fail_precondition(msg); \
  } while (0)

#define APS_REQUIRE(cond, msg)             \
  do {                                     \
    if (!(cond)) ::aps::fail_runtime(msg); \
  } while (0)
