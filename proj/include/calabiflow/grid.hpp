#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "calabiflow/aligned.hpp"

namespace calabi {

inline constexpr int kMaxAxes = 6;

// Uniform sampling of the flat torus prod_a [0, L_a). Row-major, last axis fastest.
class PeriodicGrid {
 public:
  PeriodicGrid() = default;
  explicit PeriodicGrid(std::vector<int> resolution, std::vector<double> period = {});

  int dims() const noexcept { return static_cast<int>(resolution_.size()); }
  int resolution(int axis) const { return resolution_.at(axis); }
  double period(int axis) const { return period_.at(axis); }
  double spacing(int axis) const { return period_.at(axis) / resolution_.at(axis); }
  const std::vector<int>& resolutions() const noexcept { return resolution_; }
  const std::vector<double>& periods() const noexcept { return period_; }

  std::size_t size() const noexcept { return size_; }
  std::size_t stride(int axis) const { return stride_.at(axis); }
  double cell_volume() const noexcept { return cell_volume_; }
  double total_volume() const noexcept { return cell_volume_ * static_cast<double>(size_); }
  double min_spacing() const;

  // Integer index along `axis` of flat point `p`.
  int index(std::size_t p, int axis) const { return static_cast<int>((p / stride_[axis]) % resolution_[axis]); }
  void coordinates(std::size_t p, std::span<double> x) const;

  bool operator==(const PeriodicGrid& o) const {
    return resolution_ == o.resolution_ && period_ == o.period_;
  }

 private:
  std::vector<int> resolution_;
  std::vector<double> period_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
  double cell_volume_ = 0.0;
};

void require_same_grid(const PeriodicGrid& a, const PeriodicGrid& b, const char* where);

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const PeriodicGrid& grid, double value = 0.0);
  ScalarField(const PeriodicGrid& grid, RealArray values);

  static ScalarField from_function(const PeriodicGrid& grid,
                                   const std::function<double(std::span<const double>)>& f);

  const PeriodicGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double mean() const;
  double sup() const;
  double inf() const;
  double max_abs() const;
  double oscillation() const { return sup() - inf(); }
  std::size_t argmax() const;
  std::size_t argmin() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);
  ScalarField& operator+=(double s);

 private:
  PeriodicGrid grid_;
  RealArray values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

// Pointwise sup |a - b|.
double sup_distance(const ScalarField& a, const ScalarField& b);

// Flat integral sum f * cell_volume.
double integrate_flat(const ScalarField& f);

}  // namespace calabi
