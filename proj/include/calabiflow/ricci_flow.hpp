#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "calabiflow/geometry.hpp"

namespace calabi::realflow {

// ---- Homothetic solutions g(t) = rho^2(t) g0 ---------------------------------

enum class HomothetyKind { einstein_positive, einstein_negative, sphere, hyperbolic };

struct HomothetySolution {
  HomothetyKind kind;
  double lambda = 0.0;  // Einstein constant (> 0), Ric = +-lambda g0
  double r0 = 1.0;      // initial radius for sphere/hyperbolic
  int n = 2;            // real dimension for sphere/hyperbolic
  std::optional<double> extinction_time;

  // rho^2(t) for Einstein kinds, r(t)^2 for sphere/hyperbolic.
  double scale_squared(double t) const;
};

HomothetySolution einstein_solution(double lambda, bool positive);
HomothetySolution sphere_solution(double r0, int n);
HomothetySolution hyperbolic_solution(double r0, int n);

// rho^2 = 1 - 2 lambda t (positive branch) or 1 + 2 lambda t (negative branch), lambda > 0.
double einstein_homothety(double lambda, double t, bool positive = true);
double einstein_extinction_time(double lambda);
double sphere_radius(double r0, int n, double t);
double sphere_extinction_time(double r0, int n);
double hyperbolic_radius(double r0, int n, double t);

struct ExtinctionBracket {
  double lower;  // last time with positive scale
  double upper;  // first time with non-positive scale
};

// March y' = f(t, y) with RK4 from y0 until y <= 0 and bisect the final step
// until the bracket is narrower than `width`.
ExtinctionBracket bracket_extinction(const std::function<double(double, double)>& f, double y0, double dt,
                                     double width, double t_max);

// ---- Solitons ---------------------------------------------------------------

// 2 R_ij + 2 lambda g_ij + nabla_i X_j + nabla_j X_i, X given as a vector field X^i.
TensorField soliton_residual(const MetricField& g, const TensorField& x, double lambda);

// ---- Conformal flow on T^2 ---------------------------------------------------

enum class SurfaceScheme { explicit_rk4, imex };

struct SurfaceFlowOptions {
  double dt = 0.0;  // 0: 0.9 of the linear stability bound (explicit) or 20x that (imex)
  int steps = 0;
  bool normalized = false;
  SurfaceScheme scheme = SurfaceScheme::explicit_rk4;
  int record_every = 1;
  bool keep_trajectory = true;
  double blowup_bound = 10.0;
  double stop_sup_r = 0.0;  // stop early once sup|R| falls below this (0 disables)
};

struct SurfaceMonitorRow {
  double t, sup_r, inf_r, volume, sup_w, osc_w;
};

struct SurfaceFlowResult {
  std::vector<double> times;
  std::vector<ScalarField> trajectory;
  std::vector<SurfaceMonitorRow> monitors;
  ScalarField final_w;
  int steps_taken = 0;
  double dt = 0.0;
};

// Scalar curvature R = -2 e^{-2w} Delta_0 w of g = e^{2w} delta on T^2.
ScalarField conformal_scalar_curvature(const ScalarField& w);
// Largest dt for which classical RK4 is linearly stable for dw/dt = e^{-2w} Delta_0 w.
double surface_stability_bound(const ScalarField& w);
SurfaceFlowResult conformal_surface_flow(const ScalarField& w0, const SurfaceFlowOptions& opts);
std::string surface_csv_header();
std::string surface_csv_row(const SurfaceMonitorRow& r);

// psi(t) = (V(t) / V(0))^{-2/n}.
std::vector<double> normalized_rescale(const std::vector<double>& volumes, int n);

// ---- Variation formulas -------------------------------------------------------

enum class VariationFormula { inverse, christoffel, riemann, ricci, scalar, volume_element, total_volume, total_scalar };

VariationFormula parse_variation_formula(const std::string& name);
std::string to_string(VariationFormula f);
const std::vector<VariationFormula>& all_variation_formulas();

struct VariationInput {
  MetricField g;
  TensorField h;  // symmetric covariant perturbation
  ScalarField H;  // g^{pq} h_pq

  static VariationInput make(const MetricField& g, const TensorField& h);
  // Validates that H equals the recomputed trace to 1e-12.
  VariationInput(MetricField g, TensorField h, ScalarField H);
};

// Max pointwise discrepancy between the analytic first variation at s = 0 and
// the central difference of the recomputed quantity along g + s h.
double variation_check(const VariationInput& v, VariationFormula formula, double ds = 1e-4);

}  // namespace calabi::realflow
