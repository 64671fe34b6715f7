#pragma once

#include <cstddef>

// Pointwise kernels with a scalar reference and an AVX2 variant chosen at runtime.
// Complex arrays are interleaved (re, im) doubles.
namespace calabi::simd {

struct KernelTable {
  const char* name;

  // out[k] = in[k] * (sre[k] + i sim[k])
  void (*mul_symbol)(const double* in, const double* sre, const double* sim, double* out, std::size_t n);
  // y += a x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // out += a * b
  void (*mul_acc)(const double* a, const double* b, double* out, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*weighted_dot)(const double* w, const double* x, const double* y, std::size_t n);

  // 2x2 Hermitian [[a, b], [conj b, d]] per point. Writes det, returns the first
  // index whose Cholesky pivots (a, det / a) are not positive, or n.
  std::size_t (*herm2_det)(const double* a, const double* d, const double* bre, const double* bim, double* det,
                           std::size_t n);
  // out = d h11 + a h22 - 2 (bre h12re + bim h12im), the trace of adj(G) H.
  void (*herm2_adj_trace)(const double* a, const double* d, const double* bre, const double* bim, const double* h11,
                          const double* h22, const double* h12re, const double* h12im, double* out, std::size_t n);
  // Eigenvalues lo <= hi per point.
  void (*herm2_eigs)(const double* a, const double* d, const double* bre, const double* bim, double* lo, double* hi,
                     std::size_t n);
};

const KernelTable& scalar_kernels();
// nullptr when the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();
// Selected once: CALABIFLOW_SIMD=scalar|avx2 overrides detection.
const KernelTable& kernels();

namespace detail {
const KernelTable& avx2_table();
}

}  // namespace calabi::simd
