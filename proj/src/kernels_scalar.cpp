// Reference kernels.  Compiled with -ffp-contract=off so every statement is
// plain IEEE mul/add; the vector backends replicate these operation orders
// exactly for the ops documented as bit-exact.

#include <cmath>

#include "aps/kernels.hpp"

namespace aps::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_scalar(const double* w, const double* x, double* y,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(w + r * cols, x, cols);
}

void matvec_t_scalar(const double* w, const double* v, double* y,
                     std::size_t rows, std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(v[r], w + r * cols, y, cols);
}

void rank1_scalar(double* w, double alpha, const double* u, const double* v,
                  std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double au = alpha * u[r];
    double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += au * v[c];
  }
}

void adam_scalar(double* p, const double* g, double* m, double* v,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bias1, double bias2) {
  const double omb1 = 1.0 - beta1;
  const double omb2 = 1.0 - beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = g[i];
    const double mi = beta1 * m[i] + omb1 * gi;
    const double vi = beta2 * v[i] + omb2 * (gi * gi);
    m[i] = mi;
    v[i] = vi;
    const double mhat = mi / bias1;
    const double vhat = vi / bias2;
    p[i] -= (lr * mhat) / (std::sqrt(vhat) + eps);
  }
}

const Ops kScalarOps = {
    "scalar",      dot_scalar,    sum_scalar,  axpy_scalar,
    matvec_scalar, matvec_t_scalar, rank1_scalar, adam_scalar,
};

}  // namespace

const Ops& scalar() { return kScalarOps; }

}  // namespace aps::kernels
