#include <cmath>
#include <numbers>

#include "calabiflow/ma_elliptic.hpp"
#include "calabiflow/random_fields.hpp"
#include "calabiflow/spectral.hpp"
#include "doctest.h"

using namespace calabi;
using std::numbers::pi;

namespace {

ScalarField product_cosine(const PeriodicGrid& g, double amp) {
  return ScalarField::from_function(g, [amp](auto x) { return amp * std::cos(2 * pi * x[0]) * std::cos(2 * pi * x[1]); });
}

// n = 1: log(1 + u_zzbar) = f + log A is the Poisson problem (1/4) Delta u = A e^f - 1.
ScalarField poisson_oracle(const ScalarField& f, double a) {
  const auto engine = SpectralEngine::for_grid(f.grid());
  ScalarField rhs = f;
  for (double& v : rhs.values()) v = a * std::exp(v) - 1.0;
  Spectrum s = engine->forward(rhs);
  Symbol quarter_lap = engine->build_symbol([](std::span<const double> k) { return -0.25 * (k[0] * k[0] + k[1] * k[1]); });
  for (std::size_t m = 0; m < s.size(); ++m) s[m] = engine->is_null_mode(m) ? 0.0 : s[m] / quarter_lap.re[m];
  return engine->inverse(s);
}

double bessel_i0(double x) {
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    term *= (x * x / 4.0) / (k * k);
    sum += term;
  }
  return sum;
}

}  // namespace

TEST_CASE("normalization constant") {
  PeriodicGrid g({64, 64});
  ScalarField f = ScalarField::from_function(g, [](auto x) { return std::cos(2 * pi * x[0]); });
  CHECK(normalization_constant(ScalarField(g), 0.7) == 1.0);
  CHECK(normalization_constant(f, 0.0) == 1.0);
  const double a = normalization_constant(f, 1.0);
  CHECK(a == doctest::Approx(1.0 / bessel_i0(1.0)).epsilon(1e-13));
  CHECK(a == doctest::Approx(1.0 / std::cyl_bessel_i(0.0, 1.0)).epsilon(1e-13));
  // 1 / I0(1) = 0.7898483...; the often-quoted 0.79024 is off in the fourth digit.
  CHECK(std::abs(a - 0.78985) < 1e-5);
  double s = 0.0;
  for (double v : f.values()) s += (a * std::exp(v) - 1.0) * g.cell_volume();
  CHECK(std::abs(s) < 1e-12);
  ComplexTorusGrid cg(1, 64);
  CHECK(normalization_constant(f, 1.0, HermitianMetricField::identity(cg)) == doctest::Approx(a).epsilon(1e-15));
}

TEST_CASE("Newton solve, n = 1") {
  ComplexTorusGrid g(1, 64);
  SUBCASE("zero data") {
    MASolution s = newton_solve(ScalarField(g.real()), 1.0, g);
    CHECK(s.u.u.max_abs() == 0.0);
    CHECK(s.A == 1.0);
    CHECK(s.residual == 0.0);
    CHECK(s.iterations == 0);
  }
  SUBCASE("Poisson oracle and bookkeeping") {
    ScalarField f = product_cosine(g.real(), 0.5);
    MASolution s = newton_solve(f, 1.0, g);
    CHECK(s.residual < 1e-10);
    CHECK(std::abs(s.u.u.mean()) < 1e-12);
    CHECK(s.A == doctest::Approx(normalization_constant(f, 1.0)).epsilon(1e-10));
    CHECK(sup_distance(s.u.u, poisson_oracle(f, s.A)) < 1e-7);
    for (std::size_t i = 1; i < s.residual_history.size(); ++i) CHECK(s.residual_history[i] <= s.residual_history[i - 1]);

    // Solvability: the final residual has zero dV~-mean.
    HermitianMetricField gt = potential_to_metric(s.u);
    double num = 0.0, den = 0.0;
    for (std::size_t q = 0; q < f.size(); ++q) {
      const double r = std::log(gt.det()[q]) - f[q] - std::log(s.A);
      num += gt.det()[q] * r;
      den += gt.det()[q];
    }
    CHECK(std::abs(num / den) < 1e-12);

    APrioriReport rep = a_priori_report(s, f);
    ScalarField oracle_trace = poisson_oracle(f, s.A);
    const ScalarField lap = complex_hessian(g, oracle_trace).trace();
    CHECK(rep.trace_min == doctest::Approx(1.0 + lap.inf()).epsilon(1e-7));
    CHECK(rep.trace_max == doctest::Approx(1.0 + lap.sup()).epsilon(1e-7));
    CHECK(rep.oscillation == doctest::Approx(oracle_trace.oscillation()).epsilon(1e-7));
    CHECK(rep.eigenvalue_min == doctest::Approx(rep.trace_min).epsilon(1e-14));
    CHECK(rep.trace_min > 0.0);
    CHECK(rep.residual < 1e-10);
    const std::string text = format_report(s, rep);
    CHECK(text.find("A = ") != std::string::npos);
    CHECK(text.find("[a_priori]") != std::string::npos);
  }
  SUBCASE("adding a constant to f rescales A only") {
    ScalarField f = product_cosine(g.real(), 0.5);
    MASolution a = newton_solve(f, 1.0, g);
    ScalarField f2 = f;
    f2 += 0.7;
    MASolution b = newton_solve(f2, 1.0, g);
    CHECK(b.A == doctest::Approx(a.A * std::exp(-0.7)).epsilon(1e-12));
    CHECK(sup_distance(a.u.u, b.u.u) < 1e-10);
  }
  SUBCASE("grid refinement") {
    ComplexTorusGrid coarse(1, 32);
    MASolution a = newton_solve(product_cosine(coarse.real(), 0.5), 1.0, coarse);
    MASolution b = newton_solve(product_cosine(g.real(), 0.5), 1.0, g);
    double e = 0.0;
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) e = std::max(e, std::abs(a.u.u[i * 32 + j] - b.u.u[(2 * i) * 64 + 2 * j]));
    CHECK(e < 1e-9);
  }
  SUBCASE("continuation is path independent") {
    ScalarField f = product_cosine(g.real(), 0.5);
    MASolution direct = newton_solve(f, 1.0, g);
    MASolution path = continuity_solve(f, g);
    CHECK(path.t == 1.0);
    CHECK(path.iterations_per_t.size() == 11);
    CHECK(sup_distance(direct.u.u, path.u.u) < 1e-9);
  }
  SUBCASE("zeroth-order term") {
    ContinuityConfig cfg;
    cfg.c = 1.0;
    ScalarField f = product_cosine(g.real(), 0.5);
    MASolution s = newton_solve(f, 1.0, g, cfg);
    CHECK(s.residual < 1e-10);
    CHECK(a_priori_report(s, f, 1.0).residual < 1e-10);
  }
  SUBCASE("non-convergence keeps the last iterate") {
    ContinuityConfig cfg;
    cfg.newton_max_iters = 1;
    try {
      newton_solve(product_cosine(g.real(), 0.5), 1.0, g, cfg);
      FAIL("expected failure");
    } catch (const MASolveError& e) {
      REQUIRE(e.last_good() != nullptr);
      CHECK(e.last_good()->residual == e.residual());
      CHECK(e.t() == 1.0);
    }
  }
}

TEST_CASE("continuity method, zero data") {
  ComplexTorusGrid g(2, 8);
  MASolution s = continuity_solve(ScalarField(g.real()), g);
  CHECK(s.u.u.max_abs() == 0.0);
  for (int it : s.iterations_per_t) CHECK(it == 0);
  APrioriReport r = a_priori_report(s, ScalarField(g.real()));
  CHECK(r.trace_min == 2.0);
  CHECK(r.trace_max == 2.0);
}

TEST_CASE("Newton solve, n = 2") {
  ComplexTorusGrid g(2, 16);
  ScalarField f = random_trig_field(g.real(), 11, 1, 0.2);
  MASolution a = newton_solve(f, 1.0, g);
  CHECK(a.residual < 1e-10);
  KahlerPotential start(g, random_trig_field(g.real(), 12, 2, 0.01));
  MASolution b = newton_solve(f, 1.0, start);
  CHECK(sup_distance(a.u.u, b.u.u) < 1e-8);
  CHECK(a_priori_report(a, f).trace_min > 0.0);
}

TEST_CASE("continuity method, n = 2") {
  ComplexTorusGrid g(2, 16);
  ScalarField f = ScalarField::from_function(g.real(), [](auto x) {
    return 0.3 * (std::cos(2 * pi * x[0]) * std::cos(2 * pi * x[1]) + std::cos(2 * pi * x[2]));
  });
  MASolution s = continuity_solve(f, g);
  APrioriReport r = a_priori_report(s, f);
  CHECK(r.residual < 1e-8);
  CHECK(r.trace_min > 0.0);
}

TEST_CASE("configuration validation") {
  ContinuityConfig c;
  c.t_steps = {0.0, 0.5};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.t_steps = {0.0, 0.6, 0.5, 1.0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.t_steps = {};
  c.damping = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.damping = 1.0;
  c.newton_tol = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
