#include <cmath>
#include <numbers>

#include "calabiflow/errors.hpp"
#include "calabiflow/ode.hpp"
#include "calabiflow/random_fields.hpp"
#include "calabiflow/ricci_flow.hpp"
#include "doctest.h"

using namespace calabi;
using namespace calabi::realflow;
using std::numbers::pi;

TEST_CASE("Einstein homothety") {
  CHECK(einstein_homothety(1.0, 0.0) == 1.0);
  CHECK(einstein_homothety(1.0, 0.25) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(einstein_extinction_time(1.0) == 0.5);
  CHECK_THROWS_AS(einstein_homothety(1.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(einstein_homothety(1.0, 0.7), std::domain_error);
  CHECK(einstein_homothety(1.0, 0.25, false) == doctest::Approx(1.5));
  auto s = einstein_solution(2.0, true);
  CHECK(s.extinction_time.has_value());
  CHECK(*s.extinction_time == 0.25);
  CHECK_FALSE(einstein_solution(2.0, false).extinction_time.has_value());
}

TEST_CASE("sphere and hyperbolic radii") {
  CHECK(sphere_radius(1.0, 3, 0.0) == 1.0);
  CHECK(sphere_radius(1.0, 2, 0.25) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(sphere_extinction_time(1.0, 2) == 0.5);
  CHECK_THROWS_AS(sphere_radius(1.0, 2, 0.51), std::domain_error);
  CHECK(hyperbolic_radius(1.0, 2, 0.0) == 1.0);
  CHECK(hyperbolic_radius(1.0, 2, 1.0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
  CHECK_THROWS_AS(hyperbolic_radius(1.0, 2, -0.1), std::domain_error);
  CHECK(sphere_solution(1.0, 3).extinction_time.has_value());
  CHECK_FALSE(hyperbolic_solution(1.0, 3).extinction_time.has_value());
  // r^2 grows linearly at rate 2(n-1).
  for (int n : {2, 3, 5}) {
    const double a = std::pow(hyperbolic_radius(1.3, n, 2.0), 2), b = std::pow(hyperbolic_radius(1.3, n, 3.0), 2);
    CHECK(b - a == doctest::Approx(2.0 * (n - 1)));
  }
}

TEST_CASE("sphere radius satisfies the algebraic identity") {
  SeededUniform u(99);
  for (int i = 0; i < 200; ++i) {
    const double r0 = 0.5 + 1.5 * (u.next() + 1.0);
    const int n = 2 + (i % 6);
    const double t = (u.next() + 1.0) * 0.5 * sphere_extinction_time(r0, n);
    const double r = sphere_radius(r0, n, t);
    CHECK(std::abs(r * r + 2.0 * (n - 1) * t - r0 * r0) <= 4e-16 * r0 * r0 * 4);
  }
}

TEST_CASE("RK4 integration of the radius ODE reproduces the closed form") {
  for (int n : {2, 3, 4}) {
    const double r0 = 1.0;
    auto rhs = [n](double, double) { return -2.0 * (n - 1); };
    const double T = sphere_extinction_time(r0, n);
    for (double frac : {0.1, 0.5, 0.9}) {
      const double t = frac * T;
      const double r2 = rk4_integrate(rhs, 0.0, r0 * r0, t, 100);
      CHECK(std::abs(std::sqrt(r2) - sphere_radius(r0, n, t)) <= 1e-10 * sphere_radius(r0, n, t));
    }
    ExtinctionBracket b = bracket_extinction(rhs, r0 * r0, 1e-3, 1e-7, 10.0);
    CHECK(b.lower <= T);
    CHECK(b.upper >= T);
    CHECK(b.upper - b.lower <= 1e-6);
  }
}

TEST_CASE("soliton residual") {
  PeriodicGrid g({32, 32});
  MetricField flat = MetricField::identity(g);
  TensorField zero(g, 1, 0);
  CHECK(soliton_residual(flat, zero, 0.0).max_abs() < 1e-14);
  TensorField r1 = soliton_residual(flat, zero, 1.0);
  CHECK(r1.max_abs() == doctest::Approx(2.0));
  CHECK(r1.sup_distance(2.0 * flat.tensor()) < 1e-15);

  ScalarField w = ScalarField::from_function(g, [](auto x) { return 0.1 * std::cos(2 * pi * x[0]) * std::sin(2 * pi * x[1]); });
  MetricField m = MetricField::conformal(w);
  TensorField res = soliton_residual(m, zero, 0.0);
  CHECK(res.sup_distance(2.0 * curvature(m).ricci) < 1e-13);
}

TEST_CASE("soliton residual is tensorial under an axis permutation") {
  PeriodicGrid g({24, 24});
  MetricField m = random_metric(g, 31, 2, 0.3);
  TensorField x(g, 1, 0);
  ScalarField x0 = random_trig_field(g, 32, 2, 0.2), x1 = random_trig_field(g, 33, 2, 0.2);
  x.component(0) = RealArray(x0.values().begin(), x0.values().end());
  x.component(1) = RealArray(x1.values().begin(), x1.values().end());
  // Swap the two coordinates: fields are transposed on the grid and slots permuted.
  const int n = 24;
  auto tr = [n](std::size_t p) { return (p % n) * n + p / n; };
  TensorField mt(g, 0, 2), xt(g, 1, 0);
  for (int i = 0; i < 2; ++i) {
    for (std::size_t p = 0; p < g.size(); ++p) xt.component(1 - i)[tr(p)] = x.component(i)[p];
    for (int j = 0; j < 2; ++j)
      for (std::size_t p = 0; p < g.size(); ++p) mt({1 - i, 1 - j})[tr(p)] = m(i, j)[p];
  }
  TensorField a = soliton_residual(m, x, 0.7);
  TensorField b = soliton_residual(MetricField(mt), xt, 0.7);
  double e = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (std::size_t p = 0; p < g.size(); ++p) e = std::max(e, std::abs(b({1 - i, 1 - j})[tr(p)] - a({i, j})[p]));
  CHECK(e < 1e-11);
}

TEST_CASE("conformal curvature agrees with the tensor curvature") {
  PeriodicGrid g({32, 32});
  ScalarField w = random_trig_field(g, 5, 2, 0.3);
  CHECK(sup_distance(conformal_scalar_curvature(w), curvature(MetricField::conformal(w)).scalar) < 1e-10);
}

TEST_CASE("conformal surface flow") {
  PeriodicGrid g({32, 32});
  SUBCASE("flat fixed point") {
    SurfaceFlowOptions o;
    o.steps = 50;
    SurfaceFlowResult r = conformal_surface_flow(ScalarField(g), o);
    CHECK(r.final_w.max_abs() == 0.0);
  }
  SUBCASE("curvature decays monotonically and the volume is conserved") {
    ScalarField w0 = ScalarField::from_function(g, [](auto x) { return 0.2 * std::cos(2 * pi * x[0]); });
    for (bool normalized : {false, true}) {
      SurfaceFlowOptions o;
      o.steps = 4000;
      o.normalized = normalized;
      o.record_every = 100;
      o.keep_trajectory = false;
      SurfaceFlowResult r = conformal_surface_flow(w0, o);
      double prev = INFINITY;
      for (const auto& row : r.monitors) {
        const double s = std::max(std::abs(row.sup_r), std::abs(row.inf_r));
        CHECK(s < prev);
        prev = s;
        // On T^2 the total curvature vanishes, so d/dt Vol = -int R dmu = 0 in both variants.
        CHECK(std::abs(row.volume - r.monitors.front().volume) < 1e-10);
      }
      CHECK(prev < 1e-3);
    }
  }
  SUBCASE("IMEX and RK4 reach the same state") {
    ScalarField w0 = random_trig_field(g, 17, 2, 0.3);
    SurfaceFlowOptions a;
    a.dt = 2e-5;
    a.steps = 5000;
    a.keep_trajectory = false;
    SurfaceFlowOptions b = a;
    b.scheme = SurfaceScheme::imex;
    b.dt = 1e-5;
    b.steps = 10000;
    CHECK(sup_distance(conformal_surface_flow(w0, a).final_w, conformal_surface_flow(w0, b).final_w) < 1e-4);
  }
  SUBCASE("step size above the stability bound is rejected") {
    ScalarField w0 = ScalarField::from_function(g, [](auto x) { return 0.2 * std::cos(2 * pi * x[0]); });
    SurfaceFlowOptions o;
    o.steps = 1;
    o.dt = 1.01 * surface_stability_bound(w0);
    CHECK_THROWS_AS(conformal_surface_flow(w0, o), std::invalid_argument);
  }
  SUBCASE("blow-up guard") {
    SurfaceFlowOptions o;
    o.steps = 1;
    CHECK_THROWS_AS(conformal_surface_flow(ScalarField(g, 10.5), o), BlowUpError);
  }
}

TEST_CASE("normalized rescaling") {
  auto psi = normalized_rescale({2.0, 2.0, 2.0}, 3);
  for (double v : psi) CHECK(v == 1.0);
  CHECK(normalized_rescale({1.0, 4.0}, 2)[1] == doctest::Approx(0.25));
  CHECK_THROWS_AS(normalized_rescale({1.0, 0.0}, 2), std::domain_error);
  // Round sphere S^n: Vol(t) proportional to r(t)^n; psi r^2 stays r0^2.
  const int n = 3;
  std::vector<double> ts, vols;
  for (int i = 0; i <= 10; ++i) {
    ts.push_back(0.02 * i);
    vols.push_back(std::pow(sphere_radius(1.0, n, ts.back()), n));
  }
  auto p = normalized_rescale(vols, n);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK(p[i] * std::pow(sphere_radius(1.0, n, ts[i]), 2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::pow(p[i], n / 2.0) * vols[i] == doctest::Approx(vols[0]).epsilon(1e-12));
  }
}

TEST_CASE("variation formulas") {
  PeriodicGrid g({32, 32, 32});
  MetricField m = random_metric(g, 41, 1, 0.3);
  SUBCASE("zero perturbation") {
    VariationInput v = VariationInput::make(m, TensorField(g, 0, 2));
    for (auto f : all_variation_formulas()) CHECK(variation_check(v, f) == 0.0);
  }
  SUBCASE("uniform conformal perturbation h = g") {
    VariationInput v = VariationInput::make(m, m.tensor());
    CHECK(sup_distance(v.H, ScalarField(g, 3.0)) < 1e-13);
    for (auto f : all_variation_formulas()) {
      CAPTURE(to_string(f));
      CHECK(variation_check(v, f) < 1e-6);
    }
  }
  SUBCASE("random analytic perturbation") {
    VariationInput v = VariationInput::make(m, random_symmetric(g, 42, 1, 0.3));
    for (auto f : all_variation_formulas()) {
      CAPTURE(to_string(f));
      CHECK(variation_check(v, f) < 1e-6);
    }
  }
  SUBCASE("central differences converge at second order") {
    VariationInput v = VariationInput::make(m, random_symmetric(g, 43, 1, 0.3));
    for (auto f : all_variation_formulas()) {
      CAPTURE(to_string(f));
      const double e1 = variation_check(v, f, 4e-2), e2 = variation_check(v, f, 2e-2);
      CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
    }
  }
  SUBCASE("stored trace must match") {
    TensorField h = random_symmetric(g, 44, 1, 0.3);
    CHECK_THROWS_AS(VariationInput(m, h, ScalarField(g, 0.0)), std::invalid_argument);
  }
  SUBCASE("leaving the positive cone is reported") {
    TensorField h = m.tensor();
    h *= -1.0;
    VariationInput v = VariationInput::make(m, h);
    CHECK_THROWS_AS(variation_check(v, VariationFormula::scalar, 1.5), NotPositiveDefinite);
  }
}
