#pragma once

#include <memory>
#include <vector>

#include "calabiflow/spectral.hpp"
#include "calabiflow/tensor.hpp"

namespace calabi {

// x -> -sum_ab D_a (C^{ab} D_b x) with spectral D and a symmetric coefficient field.
// Symmetric positive semidefinite on the grid; its kernel is spanned by the
// modes on which every spectral derivative vanishes.
class DivergenceOperator {
 public:
  // coef holds d*d arrays (row-major a, b), assumed symmetric.
  DivergenceOperator(const PeriodicGrid& grid, std::vector<RealArray> coef);

  const PeriodicGrid& grid() const noexcept { return grid_; }
  const SpectralEngine& engine() const noexcept { return *engine_; }
  void apply(const double* x, double* out) const;
  // Flat operator with the grid-mean coefficients, inverted spectrally on the
  // complement of the null modes.
  void apply_flat_inverse(const double* r, double* out, double shift = 0.0) const;
  const std::vector<double>& mean_coefficients() const noexcept { return mean_; }

 private:
  PeriodicGrid grid_;
  std::shared_ptr<const SpectralEngine> engine_;
  std::vector<RealArray> coef_;
  std::vector<double> mean_;
  Symbol flat_symbol_;
};

// M-orthogonal projector onto the complement of the derivative null space
// (the 2^d parity patterns), with M = diag(mass).
class NullSpaceProjector {
 public:
  NullSpaceProjector(const PeriodicGrid& grid, const RealArray& mass);
  void project(double* x) const;

 private:
  int patterns_ = 0;
  std::vector<unsigned char> parity_;
  const RealArray* mass_;
  std::vector<double> gram_inverse_;
};

// Dirichlet form of a Riemannian metric: K = D^T (sqrt(g) g^{ij}) D, M = sqrt(g).
struct DirichletForm {
  std::unique_ptr<DivergenceOperator> stiffness;
  RealArray mass;

  static DirichletForm from_metric(const MetricField& g);
  // Energy x^T K x and mass x^T M x, both times the cell volume.
  double energy(const double* x) const;
  double mass_norm(const double* x) const;
};

}  // namespace calabi
