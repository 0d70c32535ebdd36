#pragma once

// Dense inner loops used by the reward models and optimizers.  A scalar
// reference implementation always exists; on x86 an AVX2+FMA variant is
// compiled in and selected at runtime when the CPU supports it.
//
// Cross-backend equivalence contract (covered by tests/kernels_test.cpp):
//   bit-exact:  axpy, rank1_update, adam_update, matvec_t
//               (same per-element operation order in every backend)
//   tolerance:  dot, sum, matvec
//               (vector backends use multiple accumulator lanes, so the
//               summation order differs from the reference)

#include <cstddef>
#include <string>

namespace aps::kernels {

struct Ops {
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // y = W x, W row-major with shape rows x cols
  void (*matvec)(const double* w, const double* x, double* y,
                 std::size_t rows, std::size_t cols);

  // y = W^T v, accumulated row by row so the order matches the reference
  void (*matvec_t)(const double* w, const double* v, double* y,
                   std::size_t rows, std::size_t cols);

  // W += alpha * u v^T
  void (*rank1_update)(double* w, double alpha, const double* u, const double* v,
                       std::size_t rows, std::size_t cols);

  // One Adam step on a parameter slab.  bias1/bias2 are the precomputed
  // 1 - beta^t corrections for the current step count.
  void (*adam_update)(double* p, const double* g, double* m, double* v,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bias1, double bias2);
};

const Ops& scalar();

// The backend picked by runtime detection, honoring an APS_KERNELS
// environment override ("scalar" or "avx2") read on first use.
const Ops& active();

// Programmatic override for tests; "auto" restores detection.
void force_backend(const std::string& name);

bool avx2_compiled();
bool avx2_supported();

// Null when the AVX2 variant is unavailable on this build/CPU.
const Ops* avx2_or_null();

}  // namespace aps::kernels
