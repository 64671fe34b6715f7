#include <cmath>

#include "calabiflow/simd/kernels.hpp"

namespace calabi::simd {
namespace {

void mul_symbol(const double* in, const double* sre, const double* sim, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    const double xr = in[2 * k], xi = in[2 * k + 1];
    out[2 * k] = xr * sre[k] - xi * sim[k];
    out[2 * k + 1] = xr * sim[k] + xi * sre[k];
  }
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += a * x[k];
}

void mul_acc(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] += a[k] * b[k];
}

double sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += x[k];
  return s;
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += x[k] * y[k];
  return s;
}

double weighted_dot(const double* w, const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += w[k] * x[k] * y[k];
  return s;
}

std::size_t herm2_det(const double* a, const double* d, const double* bre, const double* bim, double* det,
                      std::size_t n) {
  std::size_t bad = n;
  for (std::size_t k = 0; k < n; ++k) {
    det[k] = a[k] * d[k] - (bre[k] * bre[k] + bim[k] * bim[k]);
    if (bad == n && !(a[k] > 0.0 && det[k] > 0.0)) bad = k;
  }
  return bad;
}

void herm2_adj_trace(const double* a, const double* d, const double* bre, const double* bim, const double* h11,
                     const double* h22, const double* h12re, const double* h12im, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k)
    out[k] = d[k] * h11[k] + a[k] * h22[k] - 2.0 * (bre[k] * h12re[k] + bim[k] * h12im[k]);
}

void herm2_eigs(const double* a, const double* d, const double* bre, const double* bim, double* lo, double* hi,
                std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    const double m = 0.5 * (a[k] + d[k]);
    const double h = 0.5 * (a[k] - d[k]);
    const double r = std::sqrt(h * h + bre[k] * bre[k] + bim[k] * bim[k]);
    lo[k] = m - r;
    hi[k] = m + r;
  }
}

constexpr KernelTable kScalar{"scalar", mul_symbol, axpy, mul_acc, sum, dot, weighted_dot,
                              herm2_det, herm2_adj_trace, herm2_eigs};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace calabi::simd
