#pragma once

#include <cmath>

// Small row-major dense kernels for per-point metric algebra (d <= 6).
namespace calabi::dense {

// Smallest Cholesky pivot of a symmetric matrix; <= 0 (or NaN) means not PD.
inline double cholesky_min_pivot(const double* a, int d) {
  double l[36];
  double min_pivot = INFINITY;
  for (int j = 0; j < d; ++j) {
    double s = a[j * d + j];
    for (int k = 0; k < j; ++k) s -= l[j * d + k] * l[j * d + k];
    if (!(s > 0.0)) return s;
    if (s < min_pivot) min_pivot = s;
    const double ljj = std::sqrt(s);
    l[j * d + j] = ljj;
    for (int i = j + 1; i < d; ++i) {
      double t = a[i * d + j];
      for (int k = 0; k < j; ++k) t -= l[i * d + k] * l[j * d + k];
      l[i * d + j] = t / ljj;
    }
  }
  return min_pivot;
}

// Inverse and determinant of an SPD matrix via Cholesky. Returns false if not PD.
inline bool spd_inverse(const double* a, int d, double* inv, double* det) {
  double l[36];
  double logdet = 0.0;
  for (int j = 0; j < d; ++j) {
    double s = a[j * d + j];
    for (int k = 0; k < j; ++k) s -= l[j * d + k] * l[j * d + k];
    if (!(s > 0.0)) return false;
    const double ljj = std::sqrt(s);
    l[j * d + j] = ljj;
    logdet += std::log(s);
    for (int i = j + 1; i < d; ++i) {
      double t = a[i * d + j];
      for (int k = 0; k < j; ++k) t -= l[i * d + k] * l[j * d + k];
      l[i * d + j] = t / ljj;
    }
  }
  // Solve L L^T X = I column by column.
  for (int c = 0; c < d; ++c) {
    double y[6];
    for (int i = 0; i < d; ++i) {
      double t = (i == c) ? 1.0 : 0.0;
      for (int k = 0; k < i; ++k) t -= l[i * d + k] * y[k];
      y[i] = t / l[i * d + i];
    }
    for (int i = d - 1; i >= 0; --i) {
      double t = y[i];
      for (int k = i + 1; k < d; ++k) t -= l[k * d + i] * inv[k * d + c];
      inv[i * d + c] = t / l[i * d + i];
    }
  }
  if (det) *det = std::exp(logdet);
  return true;
}

}  // namespace calabi::dense
