#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "aps/kernels.hpp"

using namespace aps;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> draw(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = draw(rng);
  return v;
}

}  // namespace

TEST_CASE("backend names and dispatch state are coherent") {
  CHECK(std::string(kernels::scalar().name) == "scalar");
  const std::string active = kernels::active().name;
  CHECK((active == "scalar" || active == "avx2"));
  if (kernels::avx2_or_null() != nullptr) {
    CHECK(kernels::avx2_compiled());
    CHECK(kernels::avx2_supported());
    CHECK(std::string(kernels::avx2_or_null()->name) == "avx2");
  }
}

TEST_CASE("force_backend overrides and restores detection") {
  kernels::force_backend("scalar");
  CHECK(std::string(kernels::active().name) == "scalar");
  if (kernels::avx2_or_null() != nullptr) {
    kernels::force_backend("avx2");
    CHECK(std::string(kernels::active().name) == "avx2");
  }
  kernels::force_backend("auto");
  CHECK_THROWS_AS(kernels::force_backend("sse9"), std::invalid_argument);
}

TEST_CASE("elementwise kernels are bit-exact across backends") {
  const kernels::Ops* vec = kernels::avx2_or_null();
  if (vec == nullptr) return;  // nothing to compare on this machine
  const kernels::Ops& ref = kernels::scalar();
  std::mt19937_64 rng(101);
  // Sizes straddle the vector width so remainder tails are exercised.
  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 31u, 64u, 67u}) {
    const auto x = random_vec(rng, n);
    auto y1 = random_vec(rng, n);
    auto y2 = y1;
    ref.axpy(0.37, x.data(), y1.data(), n);
    vec->axpy(0.37, x.data(), y2.data(), n);
    CHECK(y1 == y2);

    const std::size_t rows = n, cols = (n % 5) + 1;
    auto w1 = random_vec(rng, rows * cols);
    auto w2 = w1;
    const auto u = random_vec(rng, rows);
    const auto v = random_vec(rng, cols);
    ref.rank1_update(w1.data(), -1.25, u.data(), v.data(), rows, cols);
    vec->rank1_update(w2.data(), -1.25, u.data(), v.data(), rows, cols);
    CHECK(w1 == w2);

    std::vector<double> t1(cols, 0.0), t2(cols, 0.0);
    ref.matvec_t(w1.data(), u.data(), t1.data(), rows, cols);
    vec->matvec_t(w2.data(), u.data(), t2.data(), rows, cols);
    CHECK(t1 == t2);

    auto p1 = random_vec(rng, n);
    auto p2 = p1;
    const auto g = random_vec(rng, n);
    auto m1 = random_vec(rng, n);
    auto m2 = m1;
    auto vm1 = random_vec(rng, n);
    for (double& e : vm1) e = std::abs(e);
    auto vm2 = vm1;
    ref.adam_update(p1.data(), g.data(), m1.data(), vm1.data(), n, 1e-3, 0.9,
                    0.999, 1e-8, 0.1, 0.001);
    vec->adam_update(p2.data(), g.data(), m2.data(), vm2.data(), n, 1e-3, 0.9,
                     0.999, 1e-8, 0.1, 0.001);
    CHECK(p1 == p2);
    CHECK(m1 == m2);
    CHECK(vm1 == vm2);
  }
}

TEST_CASE("reductions agree across backends to relative tolerance") {
  const kernels::Ops* vec = kernels::avx2_or_null();
  if (vec == nullptr) return;
  const kernels::Ops& ref = kernels::scalar();
  std::mt19937_64 rng(303);
  for (std::size_t n : {1u, 5u, 16u, 33u, 128u, 1001u}) {
    const auto a = random_vec(rng, n);
    const auto b = random_vec(rng, n);
    const double d1 = ref.dot(a.data(), b.data(), n);
    const double d2 = vec->dot(a.data(), b.data(), n);
    CHECK(std::abs(d1 - d2) <= 1e-12 * (1.0 + std::abs(d1)));
    const double s1 = ref.sum(a.data(), n);
    const double s2 = vec->sum(a.data(), n);
    CHECK(std::abs(s1 - s2) <= 1e-12 * (1.0 + std::abs(s1)));

    const std::size_t rows = (n % 7) + 2;
    const auto w = random_vec(rng, rows * n);
    std::vector<double> y1(rows), y2(rows);
    ref.matvec(w.data(), a.data(), y1.data(), rows, n);
    vec->matvec(w.data(), a.data(), y2.data(), rows, n);
    for (std::size_t r = 0; r < rows; ++r) {
      CHECK(std::abs(y1[r] - y2[r]) <= 1e-12 * (1.0 + std::abs(y1[r])));
    }
  }
}

TEST_CASE("scalar kernels compute what they claim") {
  const kernels::Ops& ops = kernels::scalar();
  const double a[3] = {1.0, 2.0, 3.0};
  const double b[3] = {-1.0, 0.5, 2.0};
  CHECK(ops.dot(a, b, 3) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(ops.sum(a, 3) == 6.0);
  double y[3] = {1.0, 1.0, 1.0};
  ops.axpy(2.0, a, y, 3);
  CHECK(y[0] == 3.0);
  CHECK(y[1] == 5.0);
  CHECK(y[2] == 7.0);
  // 2x3 matrix [[1,2,3],[-1,0.5,2]] times [1,1,1]
  double w[6] = {1.0, 2.0, 3.0, -1.0, 0.5, 2.0};
  double out[2];
  const double ones[3] = {1.0, 1.0, 1.0};
  ops.matvec(w, ones, out, 2, 3);
  CHECK(out[0] == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(1.5).epsilon(1e-15));
  double outt[3] = {0.0, 0.0, 0.0};
  const double v2[2] = {1.0, -2.0};
  ops.matvec_t(w, v2, outt, 2, 3);
  CHECK(outt[0] == doctest::Approx(3.0).epsilon(1e-15));   // 1*1 + (-1)*(-2)
  CHECK(outt[1] == doctest::Approx(1.0).epsilon(1e-15));   // 2*1 + 0.5*(-2)
  CHECK(outt[2] == doctest::Approx(-1.0).epsilon(1e-15));  // 3*1 + 2*(-2)
}
