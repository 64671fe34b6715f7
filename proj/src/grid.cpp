#include "calabiflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "calabiflow/simd/kernels.hpp"

namespace calabi {

PeriodicGrid::PeriodicGrid(std::vector<int> resolution, std::vector<double> period)
    : resolution_(std::move(resolution)), period_(std::move(period)) {
  if (resolution_.empty() || resolution_.size() > static_cast<std::size_t>(kMaxAxes))
    throw std::invalid_argument("grid: axis count must be in [1, " + std::to_string(kMaxAxes) + "]");
  if (period_.empty()) period_.assign(resolution_.size(), 1.0);
  if (period_.size() != resolution_.size())
    throw std::invalid_argument("grid: period count does not match resolution count");
  for (std::size_t a = 0; a < resolution_.size(); ++a) {
    if (resolution_[a] < 8 || resolution_[a] % 2 != 0)
      throw std::invalid_argument("grid: resolution on axis " + std::to_string(a) +
                                  " must be even and >= 8, got " + std::to_string(resolution_[a]));
    if (!(period_[a] > 0.0) || !std::isfinite(period_[a]))
      throw std::invalid_argument("grid: period on axis " + std::to_string(a) + " must be positive");
  }
  stride_.assign(resolution_.size(), 1);
  for (int a = dims() - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * resolution_[a + 1];
  size_ = stride_[0] * resolution_[0];
  cell_volume_ = 1.0;
  for (int a = 0; a < dims(); ++a) cell_volume_ *= spacing(a);
}

double PeriodicGrid::min_spacing() const {
  double h = spacing(0);
  for (int a = 1; a < dims(); ++a) h = std::min(h, spacing(a));
  return h;
}

void PeriodicGrid::coordinates(std::size_t p, std::span<double> x) const {
  for (int a = 0; a < dims(); ++a) x[a] = index(p, a) * spacing(a);
}

void require_same_grid(const PeriodicGrid& a, const PeriodicGrid& b, const char* where) {
  if (!(a == b)) throw std::invalid_argument(std::string(where) + ": fields live on different grids");
}

ScalarField::ScalarField(const PeriodicGrid& grid, double value) : grid_(grid), values_(grid.size(), value) {}

ScalarField::ScalarField(const PeriodicGrid& grid, RealArray values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw std::invalid_argument("scalar field: value count " + std::to_string(values_.size()) +
                                " does not match grid size " + std::to_string(grid_.size()));
}

ScalarField ScalarField::from_function(const PeriodicGrid& grid,
                                       const std::function<double(std::span<const double>)>& f) {
  ScalarField out(grid);
  double x[kMaxAxes];
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.coordinates(p, std::span<double>(x, grid.dims()));
    out.values_[p] = f(std::span<const double>(x, grid.dims()));
  }
  return out;
}

double ScalarField::mean() const { return simd::kernels().sum(values_.data(), values_.size()) / values_.size(); }
double ScalarField::sup() const { return *std::max_element(values_.begin(), values_.end()); }
double ScalarField::inf() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}
std::size_t ScalarField::argmax() const {
  return static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) - values_.begin());
}
std::size_t ScalarField::argmin() const {
  return static_cast<std::size_t>(std::min_element(values_.begin(), values_.end()) - values_.begin());
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(grid_, o.grid_, "scalar field +=");
  simd::kernels().axpy(1.0, o.data(), data(), size());
  return *this;
}
ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(grid_, o.grid_, "scalar field -=");
  simd::kernels().axpy(-1.0, o.data(), data(), size());
  return *this;
}
ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}
ScalarField& ScalarField::operator+=(double s) {
  for (double& v : values_) v += s;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

double sup_distance(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "sup_distance");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double integrate_flat(const ScalarField& f) {
  return simd::kernels().sum(f.data(), f.size()) * f.grid().cell_volume();
}

}  // namespace calabi
