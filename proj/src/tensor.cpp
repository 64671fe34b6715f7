#include "calabiflow/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "calabiflow/dense.hpp"
#include "calabiflow/errors.hpp"

namespace calabi {

TensorField::TensorField(const PeriodicGrid& grid, int upper, int lower)
    : grid_(grid), dim_(grid.dims()), upper_(upper), lower_(lower) {
  if (upper < 0 || lower < 0) throw std::invalid_argument("tensor field: negative rank");
  std::size_t count = 1;
  for (int r = 0; r < upper + lower; ++r) count *= static_cast<std::size_t>(dim_);
  components_.assign(count, RealArray(grid.size(), 0.0));
}

std::size_t TensorField::flat(std::initializer_list<int> idx) const {
  if (static_cast<int>(idx.size()) != rank()) throw std::invalid_argument("tensor field: wrong index count");
  std::size_t c = 0;
  for (int i : idx) {
    if (i < 0 || i >= dim_) throw std::out_of_range("tensor field: index out of range");
    c = c * dim_ + i;
  }
  return c;
}

ScalarField TensorField::component_field(std::size_t c) const { return ScalarField(grid_, components_.at(c)); }

double TensorField::sup_distance(const TensorField& o) const {
  require_same_grid(grid_, o.grid_, "tensor sup_distance");
  if (o.components_.size() != components_.size()) throw std::invalid_argument("tensor sup_distance: rank mismatch");
  double m = 0.0;
  for (std::size_t c = 0; c < components_.size(); ++c)
    for (std::size_t p = 0; p < components_[c].size(); ++p)
      m = std::max(m, std::abs(components_[c][p] - o.components_[c][p]));
  return m;
}

double TensorField::max_abs() const {
  double m = 0.0;
  for (const auto& comp : components_)
    for (double v : comp) m = std::max(m, std::abs(v));
  return m;
}

TensorField& TensorField::operator+=(const TensorField& o) {
  require_same_grid(grid_, o.grid_, "tensor +=");
  if (o.components_.size() != components_.size()) throw std::invalid_argument("tensor +=: rank mismatch");
  for (std::size_t c = 0; c < components_.size(); ++c)
    for (std::size_t p = 0; p < components_[c].size(); ++p) components_[c][p] += o.components_[c][p];
  return *this;
}

TensorField& TensorField::operator*=(double s) {
  for (auto& comp : components_)
    for (double& v : comp) v *= s;
  return *this;
}

TensorField operator+(TensorField a, const TensorField& b) { return a += b; }
TensorField operator-(TensorField a, const TensorField& b) {
  TensorField nb = b;
  nb *= -1.0;
  return a += nb;
}
TensorField operator*(double s, TensorField a) { return a *= s; }

bool is_symmetric(const TensorField& t, double tol) {
  if (t.rank() != 2) return false;
  const int d = t.dim();
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const auto& a = t({i, j});
      const auto& b = t({j, i});
      for (std::size_t p = 0; p < a.size(); ++p)
        if (std::abs(a[p] - b[p]) > tol * std::max(1.0, std::abs(a[p]))) return false;
    }
  return true;
}

MetricField::MetricField(TensorField components) : g_(std::move(components)) {
  if (g_.rank() != 2) throw std::invalid_argument("metric field: rank must be 2");
  if (!is_symmetric(g_, 1e-12)) throw std::invalid_argument("metric field: components are not symmetric");
  const int d = g_.dim();
  double m[kMaxAxes * kMaxAxes];
  for (std::size_t p = 0; p < g_.points(); ++p) {
    at(p, std::span<double>(m, d * d));
    const double pivot = dense::cholesky_min_pivot(m, d);
    if (!(pivot > 0.0))
      throw NotPositiveDefinite(p, pivot, "metric field: not positive definite at grid point " + std::to_string(p));
  }
}

MetricField MetricField::identity(const PeriodicGrid& grid) { return scaled_identity(grid, 1.0); }

MetricField MetricField::scaled_identity(const PeriodicGrid& grid, double c) {
  TensorField t(grid, 0, 2);
  for (int i = 0; i < grid.dims(); ++i) std::fill(t({i, i}).begin(), t({i, i}).end(), c);
  return MetricField(std::move(t));
}

MetricField MetricField::conformal(const ScalarField& w) {
  TensorField t(w.grid(), 0, 2);
  for (int i = 0; i < w.grid().dims(); ++i)
    for (std::size_t p = 0; p < w.size(); ++p) t({i, i})[p] = std::exp(2.0 * w[p]);
  return MetricField(std::move(t));
}

void MetricField::at(std::size_t p, std::span<double> m) const {
  const int d = g_.dim();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m[i * d + j] = g_.component(i * d + j)[p];
}

}  // namespace calabi
