#pragma once

#include <cstdint>

#include "calabiflow/grid.hpp"
#include "calabiflow/tensor.hpp"

namespace calabi {

// Deterministic uniform doubles in [-1, 1) from a 64-bit seed (splitmix64), so
// seeded fields are identical across standard libraries.
class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed) : state_(seed) {}
  double next();

 private:
  std::uint64_t state_;
};

// Mean-zero band-limited trigonometric polynomial sum_k a_k cos(2pi k.x/L) + b_k sin(...)
// over integer modes with |k_a| <= max_mode. Coefficients are scaled so that
// sum |a_k| + |b_k| = amplitude, hence sup|f| <= amplitude.
ScalarField random_trig_field(const PeriodicGrid& grid, std::uint64_t seed, int max_mode, double amplitude);

// I + perturbation with diagonal amplitude `amplitude` and off-diagonal amplitude
// amplitude / d; positive definite by diagonal dominance when amplitude < 0.5.
MetricField random_metric(const PeriodicGrid& grid, std::uint64_t seed, int max_mode, double amplitude);

// Symmetric covariant rank-2 field with entries bounded by amplitude.
TensorField random_symmetric(const PeriodicGrid& grid, std::uint64_t seed, int max_mode, double amplitude);

}  // namespace calabi
