// AVX2+FMA kernels.  This translation unit is the only place FMA is allowed:
// reductions (dot, sum, matvec) fuse and use four accumulator lanes, so they
// round differently from the reference and are tested to a tolerance.  The
// elementwise ops below stick to separate mul/add in the reference order and
// stay bit-exact against the scalar backend.

#include "aps/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace aps::kernels {
namespace {

inline double hsum(__m256d acc) {
  alignas(32) double t[4];
  _mm256_store_pd(t, acc);
  return (t[0] + t[1]) + (t[2] + t[3]);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_avx2(const double* w, const double* x, double* y,
                 std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_avx2(w + r * cols, x, cols);
}

void matvec_t_avx2(const double* w, const double* v, double* y,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(v[r], w + r * cols, y, cols);
}

void rank1_avx2(double* w, double alpha, const double* u, const double* v,
                std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double au = alpha * u[r];
    axpy_avx2(au, v, w + r * cols, cols);
  }
}

void adam_avx2(double* p, const double* g, double* m, double* v,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bias1, double bias2) {
  const double omb1s = 1.0 - beta1;
  const double omb2s = 1.0 - beta2;
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vomb1 = _mm256_set1_pd(omb1s);
  const __m256d vomb2 = _mm256_set1_pd(omb2s);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vbc1 = _mm256_set1_pd(bias1);
  const __m256d vbc2 = _mm256_set1_pd(bias2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    const __m256d mi =
        _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)),
                      _mm256_mul_pd(vomb1, gi));
    const __m256d g2 = _mm256_mul_pd(gi, gi);
    const __m256d vi =
        _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                      _mm256_mul_pd(vomb2, g2));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, vbc1);
    const __m256d vhat = _mm256_div_pd(vi, vbc2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    const double gi = g[i];
    const double mi = beta1 * m[i] + omb1s * gi;
    const double vi = beta2 * v[i] + omb2s * (gi * gi);
    m[i] = mi;
    v[i] = vi;
    const double mhat = mi / bias1;
    const double vhat = vi / bias2;
    p[i] -= (lr * mhat) / (std::sqrt(vhat) + eps);
  }
}

const Ops kAvx2Ops = {
    "avx2",      dot_avx2,     sum_avx2,   axpy_avx2,
    matvec_avx2, matvec_t_avx2, rank1_avx2, adam_avx2,
};

}  // namespace

const Ops* avx2_ops_impl() { return &kAvx2Ops; }

}  // namespace aps::kernels

#else  // no AVX2 at compile time

namespace aps::kernels {

const Ops* avx2_ops_impl() { return nullptr; }

}  // namespace aps::kernels

#endif
