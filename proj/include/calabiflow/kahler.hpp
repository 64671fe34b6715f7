#pragma once

#include <complex>
#include <filesystem>
#include <vector>

#include "calabiflow/grid.hpp"
#include "calabiflow/spectral.hpp"
#include "calabiflow/tensor.hpp"

namespace calabi {

using cplx = std::complex<double>;

// Largest supported complex dimension.
inline constexpr int kMaxComplexDim = 3;

// Flat complex torus C^n / Z^{2n}. Real axis 2j is x_j and axis 2j+1 is y_j,
// with z_j = x_j + i y_j and unit periods.
class ComplexTorusGrid {
 public:
  ComplexTorusGrid() = default;
  ComplexTorusGrid(int n, int resolution);
  ComplexTorusGrid(int n, std::vector<int> resolution);

  int n() const noexcept { return n_; }
  const PeriodicGrid& real() const noexcept { return grid_; }
  std::size_t size() const noexcept { return grid_.size(); }
  static int x_axis(int j) { return 2 * j; }
  static int y_axis(int j) { return 2 * j + 1; }

  bool operator==(const ComplexTorusGrid& o) const { return n_ == o.n_ && grid_ == o.grid_; }

 private:
  int n_ = 0;
  PeriodicGrid grid_;
};

// Per-point n x n complex matrices with entries split into real and imaginary arrays.
class HermitianField {
 public:
  HermitianField() = default;
  explicit HermitianField(const ComplexTorusGrid& grid);

  const ComplexTorusGrid& grid() const noexcept { return grid_; }
  int n() const noexcept { return grid_.n(); }
  std::size_t size() const noexcept { return grid_.size(); }

  RealArray& re(int i, int j) { return re_[i * n() + j]; }
  RealArray& im(int i, int j) { return im_[i * n() + j]; }
  const RealArray& re(int i, int j) const { return re_[i * n() + j]; }
  const RealArray& im(int i, int j) const { return im_[i * n() + j]; }
  cplx at(std::size_t p, int i, int j) const { return {re(i, j)[p], im(i, j)[p]}; }
  void set(std::size_t p, int i, int j, cplx v) {
    re(i, j)[p] = v.real();
    im(i, j)[p] = v.imag();
  }
  // Row-major n x n matrix at point p.
  void matrix(std::size_t p, cplx* m) const;

  static HermitianField identity(const ComplexTorusGrid& grid, double scale = 1.0);

  // sup over points and entries of |a_ij - conj(a_ji)|.
  double hermitian_defect() const;
  double max_abs() const;
  double sup_distance(const HermitianField& o) const;
  ScalarField trace() const;

  HermitianField& operator+=(const HermitianField& o);
  HermitianField& operator-=(const HermitianField& o);
  HermitianField& operator*=(double s);

 private:
  ComplexTorusGrid grid_;
  std::vector<RealArray> re_;
  std::vector<RealArray> im_;
};

HermitianField operator+(HermitianField a, const HermitianField& b);
HermitianField operator-(HermitianField a, const HermitianField& b);
HermitianField operator*(double s, HermitianField a);

// Hermitian and positive definite at every point, checked by Cholesky.
class HermitianMetricField {
 public:
  HermitianMetricField() = default;
  // Throws std::invalid_argument if not Hermitian to 1e-12 and
  // NotPositiveDefinite at the first point whose Cholesky pivot is <= 0.
  explicit HermitianMetricField(HermitianField g);

  static HermitianMetricField identity(const ComplexTorusGrid& grid);

  const ComplexTorusGrid& grid() const noexcept { return g_.grid(); }
  int n() const noexcept { return g_.n(); }
  const HermitianField& field() const noexcept { return g_; }
  cplx at(std::size_t p, int i, int j) const { return g_.at(p, i, j); }

  const ScalarField& det() const noexcept { return det_; }
  ScalarField log_det() const;
  // tr(G^{-1} F) = g^{i jbar} F_{i jbar} per point.
  ScalarField trace_of(const HermitianField& f) const;
  // Pointwise inverse matrix G^{-1}.
  HermitianField inverse() const;
  // Extreme eigenvalues per point.
  void eigenvalue_bounds(ScalarField& lo, ScalarField& hi) const;

 private:
  HermitianField g_;
  ScalarField det_;
};

// u = mean-free real potential over a reference metric; g~ = g0 + ddbar u.
struct KahlerPotential {
  ComplexTorusGrid grid;
  ScalarField u;
  HermitianMetricField g0;

  // The mean of u is removed unless `recenter` is false.
  KahlerPotential(ScalarField u, HermitianMetricField g0, bool recenter = true);
  // Over the flat metric.
  KahlerPotential(const ComplexTorusGrid& grid, ScalarField u);
};

// H_{i jbar} = d^2 u / dz_i dzbar_j from spectral real derivatives.
HermitianField complex_hessian(const ComplexTorusGrid& grid, const ScalarField& u);
HermitianField complex_hessian(const ComplexTorusGrid& grid, const Spectrum& u_hat);

// g0 + ddbar u. Throws AdmissibilityError (carrying `time`) where positivity fails.
HermitianMetricField potential_to_metric(const KahlerPotential& p, double time = 0.0);

// R_{i jbar} = -d_i d_jbar log det g.
HermitianField ricci(const HermitianMetricField& g);

// g^{i jbar} f_{i jbar}, a quarter of the flat real Laplacian when g = delta.
ScalarField kahler_laplacian(const HermitianMetricField& g, const ScalarField& f);

// det(g~) / det(g0).
ScalarField ma_operator(const KahlerPotential& p);

// Underlying real Riemannian metric on the 2n real axes (x1, y1, x2, y2, ...),
// normalised so that g = delta maps to 2 I.
MetricField real_metric(const HermitianMetricField& g);

// Hermitian dump: per point the upper triangle with diagonal, each entry as an
// interleaved (re, im) pair, in the grid dump format.
void write_hermitian(const std::filesystem::path& path, const HermitianField& h);
HermitianField read_hermitian(const std::filesystem::path& path, int n);

}  // namespace calabi
