#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "calabiflow/grid.hpp"

namespace calabi {

// Real tensor field with `upper` contravariant and `lower` covariant slots.
// Component (i1..ir) is stored as its own array at flat index sum i_k d^{r-1-k},
// upper slots first.
class TensorField {
 public:
  TensorField() = default;
  TensorField(const PeriodicGrid& grid, int upper, int lower);

  const PeriodicGrid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return dim_; }
  int upper() const noexcept { return upper_; }
  int lower() const noexcept { return lower_; }
  int rank() const noexcept { return upper_ + lower_; }
  std::size_t component_count() const noexcept { return components_.size(); }
  std::size_t points() const noexcept { return grid_.size(); }

  std::size_t flat(std::initializer_list<int> idx) const;
  RealArray& component(std::size_t c) { return components_[c]; }
  const RealArray& component(std::size_t c) const { return components_[c]; }
  RealArray& operator()(std::initializer_list<int> idx) { return components_[flat(idx)]; }
  const RealArray& operator()(std::initializer_list<int> idx) const { return components_[flat(idx)]; }
  ScalarField component_field(std::size_t c) const;

  // sup over points and components of |this - o|.
  double sup_distance(const TensorField& o) const;
  double max_abs() const;
  TensorField& operator+=(const TensorField& o);
  TensorField& operator*=(double s);

 private:
  PeriodicGrid grid_;
  int dim_ = 0;
  int upper_ = 0;
  int lower_ = 0;
  std::vector<RealArray> components_;
};

TensorField operator+(TensorField a, const TensorField& b);
TensorField operator-(TensorField a, const TensorField& b);
TensorField operator*(double s, TensorField a);

// Symmetric positive-definite rank-2 field, verified pointwise by Cholesky.
// Also used for the inverse metric g^{ij}.
class MetricField {
 public:
  MetricField() = default;
  // Throws NotPositiveDefinite with the first offending point, or
  // std::invalid_argument if the components are not symmetric to 1e-12.
  explicit MetricField(TensorField components);

  static MetricField identity(const PeriodicGrid& grid);
  static MetricField scaled_identity(const PeriodicGrid& grid, double c);
  static MetricField conformal(const ScalarField& w);  // e^{2w} delta

  const PeriodicGrid& grid() const noexcept { return g_.grid(); }
  int dim() const noexcept { return g_.dim(); }
  const TensorField& tensor() const noexcept { return g_; }
  const RealArray& operator()(int i, int j) const { return g_({i, j}); }

  // Per-point matrix (row-major d x d) at point p.
  void at(std::size_t p, std::span<double> m) const;

 private:
  TensorField g_;
};

// Symmetric check helper: true when |T_ij - T_ji| <= tol everywhere.
bool is_symmetric(const TensorField& t, double tol);

}  // namespace calabi
