#include <immintrin.h>

#include "calabiflow/simd/kernels.hpp"

namespace calabi::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void mul_symbol(const double* in, const double* sre, const double* sim, double* out, std::size_t n) {
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    // in = [r0 i0 r1 i1]; symbols duplicated per complex lane.
    __m256d x = _mm256_loadu_pd(in + 2 * k);
    __m128d sr = _mm_loadu_pd(sre + k);
    __m128d si = _mm_loadu_pd(sim + k);
    __m256d vr = _mm256_permute4x64_pd(_mm256_castpd128_pd256(sr), 0x50);
    __m256d vi = _mm256_permute4x64_pd(_mm256_castpd128_pd256(si), 0x50);
    __m256d xs = _mm256_permute_pd(x, 0x5);  // [i0 r0 i1 r1]
    // re = r sr - i si ; im = i sr + r si
    __m256d t = _mm256_mul_pd(xs, vi);
    __m256d res = _mm256_fmaddsub_pd(x, vr, t);
    _mm256_storeu_pd(out + 2 * k, res);
  }
  for (; k < n; ++k) {
    const double xr = in[2 * k], xi = in[2 * k + 1];
    out[2 * k] = xr * sre[k] - xi * sim[k];
    out[2 * k + 1] = xr * sim[k] + xi * sre[k];
  }
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4)
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
  for (; k < n; ++k) y[k] += a * x[k];
}

void mul_acc(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4)
    _mm256_storeu_pd(out + k,
                     _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), _mm256_loadu_pd(out + k)));
  for (; k < n; ++k) out[k] += a[k] * b[k];
}

double sum(const double* x, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    s0 = _mm256_add_pd(s0, _mm256_loadu_pd(x + k));
    s1 = _mm256_add_pd(s1, _mm256_loadu_pd(x + k + 4));
  }
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; k < n; ++k) s += x[k];
  return s;
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k + 4), _mm256_loadu_pd(y + k + 4), s1);
  }
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; k < n; ++k) s += x[k] * y[k];
  return s;
}

double weighted_dot(const double* w, const double* x, const double* y, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d wx = _mm256_mul_pd(_mm256_loadu_pd(w + k), _mm256_loadu_pd(x + k));
    s0 = _mm256_fmadd_pd(wx, _mm256_loadu_pd(y + k), s0);
  }
  double s = hsum(s0);
  for (; k < n; ++k) s += w[k] * x[k] * y[k];
  return s;
}

std::size_t herm2_det(const double* a, const double* d, const double* bre, const double* bim, double* det,
                      std::size_t n) {
  std::size_t bad = n;
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d va = _mm256_loadu_pd(a + k);
    __m256d br = _mm256_loadu_pd(bre + k);
    __m256d bi = _mm256_loadu_pd(bim + k);
    __m256d b2 = _mm256_fmadd_pd(bi, bi, _mm256_mul_pd(br, br));
    __m256d dt = _mm256_fmsub_pd(va, _mm256_loadu_pd(d + k), b2);
    _mm256_storeu_pd(det + k, dt);
    if (bad == n) {
      __m256d ok = _mm256_and_pd(_mm256_cmp_pd(va, zero, _CMP_GT_OQ), _mm256_cmp_pd(dt, zero, _CMP_GT_OQ));
      int mask = _mm256_movemask_pd(ok);
      if (mask != 0xF) bad = k + static_cast<std::size_t>(__builtin_ctz(~mask & 0xF));
    }
  }
  for (; k < n; ++k) {
    det[k] = a[k] * d[k] - (bre[k] * bre[k] + bim[k] * bim[k]);
    if (bad == n && !(a[k] > 0.0 && det[k] > 0.0)) bad = k;
  }
  return bad;
}

void herm2_adj_trace(const double* a, const double* d, const double* bre, const double* bim, const double* h11,
                     const double* h22, const double* h12re, const double* h12im, double* out, std::size_t n) {
  const __m256d m2 = _mm256_set1_pd(-2.0);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d cross = _mm256_fmadd_pd(_mm256_loadu_pd(bim + k), _mm256_loadu_pd(h12im + k),
                                    _mm256_mul_pd(_mm256_loadu_pd(bre + k), _mm256_loadu_pd(h12re + k)));
    __m256d diag = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(h22 + k),
                                   _mm256_mul_pd(_mm256_loadu_pd(d + k), _mm256_loadu_pd(h11 + k)));
    _mm256_storeu_pd(out + k, _mm256_fmadd_pd(m2, cross, diag));
  }
  for (; k < n; ++k) out[k] = d[k] * h11[k] + a[k] * h22[k] - 2.0 * (bre[k] * h12re[k] + bim[k] * h12im[k]);
}

void herm2_eigs(const double* a, const double* d, const double* bre, const double* bim, double* lo, double* hi,
                std::size_t n) {
  const __m256d half = _mm256_set1_pd(0.5);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d va = _mm256_loadu_pd(a + k), vd = _mm256_loadu_pd(d + k);
    __m256d m = _mm256_mul_pd(half, _mm256_add_pd(va, vd));
    __m256d h = _mm256_mul_pd(half, _mm256_sub_pd(va, vd));
    __m256d br = _mm256_loadu_pd(bre + k), bi = _mm256_loadu_pd(bim + k);
    __m256d r2 = _mm256_fmadd_pd(h, h, _mm256_fmadd_pd(br, br, _mm256_mul_pd(bi, bi)));
    __m256d r = _mm256_sqrt_pd(r2);
    _mm256_storeu_pd(lo + k, _mm256_sub_pd(m, r));
    _mm256_storeu_pd(hi + k, _mm256_add_pd(m, r));
  }
  for (; k < n; ++k) {
    const double m = 0.5 * (a[k] + d[k]);
    const double h = 0.5 * (a[k] - d[k]);
    const double r = __builtin_sqrt(h * h + bre[k] * bre[k] + bim[k] * bim[k]);
    lo[k] = m - r;
    hi[k] = m + r;
  }
}

constexpr KernelTable kAvx2{"avx2", mul_symbol, axpy, mul_acc, sum, dot, weighted_dot,
                            herm2_det, herm2_adj_trace, herm2_eigs};

}  // namespace

namespace detail {
const KernelTable& avx2_table() { return kAvx2; }
}  // namespace detail

}  // namespace calabi::simd
