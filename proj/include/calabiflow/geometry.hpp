#pragma once

#include "calabiflow/spectral.hpp"
#include "calabiflow/tensor.hpp"

namespace calabi {

// Pointwise inverse g^{ij}.
MetricField metric_inverse(const MetricField& g);

// d_a T for every component of T: result has one extra lower slot, placed first.
TensorField gradient(const TensorField& t);
TensorField gradient(const ScalarField& f);

// Gamma^k_ij, stored with index (k, i, j).
TensorField christoffel(const MetricField& g);
TensorField christoffel(const MetricField& g, const MetricField& ginv);

struct Curvature {
  TensorField riemann;  // R^l_{ijk}, index (l, i, j, k), R(d_i, d_j) d_k = R^l_{ijk} d_l
  TensorField ricci;    // R_jk = R^i_{ijk}
  ScalarField scalar;   // g^{jk} R_jk
};

Curvature curvature(const MetricField& g);

// R_{ijkl} = g_{lm} R^m_{ijk}.
TensorField lower_riemann(const MetricField& g, const TensorField& riemann);

// g^{ij}(d_i d_j f - Gamma^k_ij d_k f).
ScalarField laplace_beltrami(const MetricField& g, const ScalarField& f);

ScalarField volume_element(const MetricField& g);
double integrate(const ScalarField& f, const MetricField& g);

// Covariant derivative of a covariant tensor: (nabla T)_{a i1..ir}, derivative slot first.
TensorField covariant_derivative(const TensorField& t, const TensorField& gamma);

// Raise a covariant 1-form field v_i to v^i.
TensorField raise_vector(const MetricField& ginv, const TensorField& v);
TensorField lower_vector(const MetricField& g, const TensorField& v);

}  // namespace calabi
