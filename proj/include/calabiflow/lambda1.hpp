#pragma once

#include <cstdint>
#include <vector>

#include "calabiflow/divergence_operator.hpp"
#include "calabiflow/tensor.hpp"

namespace calabi {

struct Lambda1Options {
  double tol = 1e-10;
  int max_iterations = 400;
  int block_size = 0;  // 0: 2 d + 2
  std::uint64_t seed = 0x5eedULL;
  // Optional starting block (for example the previous snapshot's eigenvectors).
  const std::vector<RealArray>* initial_block = nullptr;
};

struct Lambda1Result {
  double value = 0.0;
  double rayleigh_quotient = 0.0;
  double residual = 0.0;  // ||K x - lambda M x|| / (lambda ||M x||)
  int iterations = 0;
  RealArray eigenvector;           // M-normalized over the grid (sum m x^2 = 1)
  std::vector<RealArray> block;    // converged Ritz block, reusable as a warm start
};

// Smallest nonzero eigenvalue of -Delta_g for the Dirichlet form, by locally
// optimal block preconditioned inverse iteration on the M-orthogonal complement
// of the constants (and of the other grid modes the spectral gradient cannot see).
Lambda1Result lambda1_solve(const DirichletForm& form, const Lambda1Options& opts = {});
Lambda1Result lambda1_solve(const MetricField& g, const Lambda1Options& opts = {});

double lambda1(const MetricField& g, double tol);

}  // namespace calabi
