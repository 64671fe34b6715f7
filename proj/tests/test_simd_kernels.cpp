#include <cmath>
#include <vector>

#include "calabiflow/random_fields.hpp"
#include "calabiflow/simd/kernels.hpp"
#include "doctest.h"

using namespace calabi;
using simd::KernelTable;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed, double shift = 0.0) {
  SeededUniform u(seed);
  std::vector<double> v(n);
  for (double& x : v) x = u.next() + shift;
  return v;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("selected kernel table is one of the known variants") {
  const KernelTable& k = simd::kernels();
  const bool known = (&k == &simd::scalar_kernels()) || (simd::avx2_kernels() && &k == simd::avx2_kernels());
  CHECK(known);
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  const KernelTable* avx = simd::avx2_kernels();
  if (!avx) {
    MESSAGE("AVX2 not available; equivalence test skipped");
    return;
  }
  const KernelTable& ref = simd::scalar_kernels();
  for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{3}, std::size_t{7}, std::size_t{64},
                        std::size_t{1023}}) {
    CAPTURE(n);
    auto x = noise(2 * n, 1), sre = noise(n, 2), sim = noise(n, 3);
    std::vector<double> o1(2 * n), o2(2 * n);
    ref.mul_symbol(x.data(), sre.data(), sim.data(), o1.data(), n);
    avx->mul_symbol(x.data(), sre.data(), sim.data(), o2.data(), n);
    for (std::size_t i = 0; i < 2 * n; ++i) CHECK(std::abs(o1[i] - o2[i]) <= 1e-15);

    auto a = noise(n, 4), b = noise(n, 5), w = noise(n, 6, 2.0);
    auto y1 = noise(n, 7), y2 = y1;
    ref.axpy(0.37, a.data(), y1.data(), n);
    avx->axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15);
    ref.mul_acc(a.data(), b.data(), y1.data(), n);
    avx->mul_acc(a.data(), b.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15);

    CHECK(rel(ref.sum(a.data(), n), avx->sum(a.data(), n)) <= 1e-13);
    CHECK(rel(ref.dot(a.data(), b.data(), n), avx->dot(a.data(), b.data(), n)) <= 1e-13);
    CHECK(rel(ref.weighted_dot(w.data(), a.data(), b.data(), n), avx->weighted_dot(w.data(), a.data(), b.data(), n)) <=
          1e-13);

    auto da = noise(n, 8, 1.5), dd = noise(n, 9, 1.5), br = noise(n, 10), bi = noise(n, 11);
    std::vector<double> det1(n), det2(n);
    const std::size_t bad1 = ref.herm2_det(da.data(), dd.data(), br.data(), bi.data(), det1.data(), n);
    const std::size_t bad2 = avx->herm2_det(da.data(), dd.data(), br.data(), bi.data(), det2.data(), n);
    CHECK(bad1 == bad2);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(det1[i] - det2[i]) <= 1e-14);

    auto h11 = noise(n, 12), h22 = noise(n, 13), hr = noise(n, 14), hi = noise(n, 15);
    std::vector<double> t1(n), t2(n);
    ref.herm2_adj_trace(da.data(), dd.data(), br.data(), bi.data(), h11.data(), h22.data(), hr.data(), hi.data(),
                        t1.data(), n);
    avx->herm2_adj_trace(da.data(), dd.data(), br.data(), bi.data(), h11.data(), h22.data(), hr.data(), hi.data(),
                         t2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(t1[i] - t2[i]) <= 1e-14);

    std::vector<double> lo1(n), hi1(n), lo2(n), hi2(n);
    ref.herm2_eigs(da.data(), dd.data(), br.data(), bi.data(), lo1.data(), hi1.data(), n);
    avx->herm2_eigs(da.data(), dd.data(), br.data(), bi.data(), lo2.data(), hi2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(lo1[i] - lo2[i]) <= 1e-14);
      CHECK(std::abs(hi1[i] - hi2[i]) <= 1e-14);
    }
  }
}

TEST_CASE("herm2_det reports the first point failing the Cholesky pivots") {
  std::vector<double> a{1, 1, 1, -1, 1, 2}, d{1, 1, 1, 1, 1, 2}, br{0, 0.5, 2, 0, 0, 0}, bi{0, 0, 0, 0, 0, 0};
  std::vector<double> det(6);
  for (const KernelTable* k : {&simd::scalar_kernels(), simd::avx2_kernels()}) {
    if (!k) continue;
    CHECK(k->herm2_det(a.data(), d.data(), br.data(), bi.data(), det.data(), 6) == 2);
    CHECK(det[1] == doctest::Approx(0.75));
  }
}
