#include <cstdlib>
#include <string>

#include "aps/error.hpp"
#include "aps/kernels.hpp"

namespace aps::kernels {

// Defined in kernels_avx2.cpp; null when that TU was built without AVX2.
const Ops* avx2_ops_impl();

namespace {

enum class Forced { Auto, Scalar, Avx2 };
Forced g_forced = Forced::Auto;

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops* detect() {
  const char* env = std::getenv("APS_KERNELS");
  if (env != nullptr) {
    const std::string s = env;
    if (s == "scalar") return &scalar();
    if (s == "avx2") {
      APS_CHECK(avx2_ops_impl() != nullptr && cpu_has_avx2(),
                "APS_KERNELS=avx2 requested but AVX2 is unavailable");
      return avx2_ops_impl();
    }
    APS_CHECK(s.empty() || s == "auto",
              "APS_KERNELS must be scalar, avx2, or auto (got '" + s + "')");
  }
  if (avx2_ops_impl() != nullptr && cpu_has_avx2()) return avx2_ops_impl();
  return &scalar();
}

}  // namespace

bool avx2_compiled() { return avx2_ops_impl() != nullptr; }

bool avx2_supported() { return avx2_compiled() && cpu_has_avx2(); }

const Ops* avx2_or_null() { return avx2_supported() ? avx2_ops_impl() : nullptr; }

void force_backend(const std::string& name) {
  if (name == "auto") {
    g_forced = Forced::Auto;
  } else if (name == "scalar") {
    g_forced = Forced::Scalar;
  } else if (name == "avx2") {
    APS_CHECK(avx2_supported(), "force_backend: AVX2 is unavailable");
    g_forced = Forced::Avx2;
  } else {
    fail_precondition("force_backend: unknown backend '" + name + "'");
  }
}

const Ops& active() {
  switch (g_forced) {
    case Forced::Scalar:
      return scalar();
    case Forced::Avx2:
      return *avx2_ops_impl();
    case Forced::Auto:
      break;
  }
  static const Ops* detected = detect();
  return *detected;
}

}  // namespace aps::kernels
