#include <cmath>
#include <numbers>

#include "calabiflow/errors.hpp"
#include "calabiflow/geometry.hpp"
#include "calabiflow/random_fields.hpp"
#include "doctest.h"

using namespace calabi;
using std::numbers::pi;

namespace {

// Independent Gauss-Jordan inverse with partial pivoting.
void gauss_jordan(std::vector<double> a, int d, std::vector<double>& inv) {
  inv.assign(d * d, 0.0);
  for (int i = 0; i < d; ++i) inv[i * d + i] = 1.0;
  for (int c = 0; c < d; ++c) {
    int piv = c;
    for (int r = c + 1; r < d; ++r)
      if (std::abs(a[r * d + c]) > std::abs(a[piv * d + c])) piv = r;
    for (int k = 0; k < d; ++k) {
      std::swap(a[c * d + k], a[piv * d + k]);
      std::swap(inv[c * d + k], inv[piv * d + k]);
    }
    const double s = a[c * d + c];
    for (int k = 0; k < d; ++k) a[c * d + k] /= s, inv[c * d + k] /= s;
    for (int r = 0; r < d; ++r) {
      if (r == c) continue;
      const double f = a[r * d + c];
      for (int k = 0; k < d; ++k) a[r * d + k] -= f * a[c * d + k], inv[r * d + k] -= f * inv[c * d + k];
    }
  }
}

// w = 0.1 cos(2 pi x) + 0.05 sin(2 pi y) with its analytic derivatives.
struct ConformalW {
  static double w(double x, double y) { return 0.1 * std::cos(2 * pi * x) + 0.05 * std::sin(2 * pi * y); }
  static double wx(double x, double) { return -0.2 * pi * std::sin(2 * pi * x); }
  static double wy(double, double y) { return 0.1 * pi * std::cos(2 * pi * y); }
  static double lap(double x, double y) {
    return -0.4 * pi * pi * std::cos(2 * pi * x) - 0.2 * pi * pi * std::sin(2 * pi * y);
  }
};

ScalarField conformal_w(const PeriodicGrid& g) {
  return ScalarField::from_function(g, [](auto x) { return ConformalW::w(x[0], x[1]); });
}

double bianchi_defect(const TensorField& riem) {
  const int d = riem.dim();
  double m = 0.0;
  for (int l = 0; l < d; ++l)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          const auto& a = riem({l, i, j, k});
          const auto& b = riem({l, j, k, i});
          const auto& c = riem({l, k, i, j});
          for (std::size_t p = 0; p < a.size(); ++p) m = std::max(m, std::abs(a[p] + b[p] + c[p]));
        }
  return m;
}

}  // namespace

TEST_CASE("metric_inverse of identity and of scaled identity") {
  PeriodicGrid g({8, 8, 8});
  MetricField id = MetricField::identity(g);
  CHECK(metric_inverse(id).tensor().sup_distance(id.tensor()) == 0.0);
  MetricField four = MetricField::scaled_identity(g, 4.0);
  CHECK(metric_inverse(four).tensor().sup_distance(MetricField::scaled_identity(g, 0.25).tensor()) < 1e-15);
}

TEST_CASE("metric_inverse matches an independent dense inverse") {
  PeriodicGrid g({8, 8, 8});
  MetricField m = random_metric(g, 3, 2, 0.4);
  MetricField inv = metric_inverse(m);
  std::vector<double> a(9), ref;
  double err = 0.0, ident = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    m.at(p, a);
    gauss_jordan(a, 3, ref);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        err = std::max(err, std::abs(inv(i, j)[p] - ref[i * 3 + j]));
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * inv(k, j)[p];
        ident = std::max(ident, std::abs(s - (i == j)));
      }
  }
  CHECK(err < 1e-12);
  CHECK(ident < 1e-12);
}

TEST_CASE("non positive definite metric reports the grid index") {
  PeriodicGrid g({8, 8});
  TensorField t(g, 0, 2);
  for (std::size_t p = 0; p < g.size(); ++p) t({0, 0})[p] = t({1, 1})[p] = 1.0;
  t({0, 1})[37] = t({1, 0})[37] = 1.5;
  try {
    MetricField m{t};
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.point() == 37);
  }
  TensorField asym(g, 0, 2);
  for (std::size_t p = 0; p < g.size(); ++p) asym({0, 0})[p] = asym({1, 1})[p] = 1.0;
  asym({0, 1})[3] = 0.1;
  CHECK_THROWS_AS(MetricField{asym}, std::invalid_argument);
}

TEST_CASE("christoffel symbols") {
  PeriodicGrid g({32, 32});
  SUBCASE("flat and constant metrics give zero") {
    CHECK(christoffel(MetricField::identity(g)).max_abs() < 1e-14);
    TensorField t(g, 0, 2);
    std::fill(t({0, 0}).begin(), t({0, 0}).end(), 2.0);
    std::fill(t({1, 1}).begin(), t({1, 1}).end(), 5.0);
    CHECK(christoffel(MetricField(t)).max_abs() < 1e-13);
  }
  SUBCASE("conformal metric") {
    TensorField gam = christoffel(MetricField::conformal(conformal_w(g)));
    double e = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
      const double x = g.index(p, 0) * g.spacing(0), y = g.index(p, 1) * g.spacing(1);
      const double w1 = ConformalW::wx(x, y), w2 = ConformalW::wy(x, y);
      e = std::max(e, std::abs(gam({0, 0, 0})[p] - w1));
      e = std::max(e, std::abs(gam({0, 1, 1})[p] + w1));
      e = std::max(e, std::abs(gam({0, 0, 1})[p] - w2));
      e = std::max(e, std::abs(gam({1, 1, 1})[p] - w2));
      e = std::max(e, std::abs(gam({1, 0, 0})[p] + w2));
      e = std::max(e, std::abs(gam({1, 0, 1})[p] - w1));
      e = std::max(e, std::abs(gam({0, 0, 1})[p] - gam({0, 1, 0})[p]));
    }
    CHECK(e < 1e-12);
  }
}

TEST_CASE("curvature of flat and conformal metrics") {
  PeriodicGrid g({32, 32});
  Curvature flat = curvature(MetricField::identity(g));
  CHECK(flat.riemann.max_abs() < 1e-14);
  CHECK(flat.scalar.max_abs() < 1e-14);

  ScalarField w = conformal_w(g);
  MetricField m = MetricField::conformal(w);
  Curvature c = curvature(m);
  double e = 0.0, einstein = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double x = g.index(p, 0) * g.spacing(0), y = g.index(p, 1) * g.spacing(1);
    const double r = -2.0 * std::exp(-2.0 * w[p]) * ConformalW::lap(x, y);
    e = std::max(e, std::abs(c.scalar[p] - r));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) einstein = std::max(einstein, std::abs(c.ricci({i, j})[p] - 0.5 * c.scalar[p] * m(i, j)[p]));
  }
  CHECK(e < 1e-10);
  CHECK(einstein < 1e-10);
}

TEST_CASE("Riemann symmetries and first Bianchi identity on a random metric") {
  PeriodicGrid g({32, 32, 32});
  MetricField m = random_metric(g, 21, 2, 0.3);
  Curvature c = curvature(m);
  TensorField low = lower_riemann(m, c.riemann);
  double anti_ij = 0.0, anti_kl = 0.0, pair = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          for (std::size_t p = 0; p < g.size(); ++p) {
            anti_ij = std::max(anti_ij, std::abs(low({i, j, k, l})[p] + low({j, i, k, l})[p]));
            anti_kl = std::max(anti_kl, std::abs(low({i, j, k, l})[p] + low({i, j, l, k})[p]));
            pair = std::max(pair, std::abs(low({i, j, k, l})[p] - low({k, l, i, j})[p]));
          }
  CHECK(anti_ij < 1e-10);
  CHECK(anti_kl < 1e-10);
  CHECK(pair < 1e-10);
  CHECK(bianchi_defect(c.riemann) < 1e-10);
  // Ricci is the contraction R^i_{ijk}, and the scalar its metric trace.
  double tr = 0.0;
  MetricField inv = metric_inverse(m);
  for (std::size_t p = 0; p < g.size(); ++p) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        double r = 0.0;
        for (int i = 0; i < 3; ++i) r += c.riemann({i, i, j, k})[p];
        tr = std::max(tr, std::abs(r - c.ricci({j, k})[p]));
        s += inv(j, k)[p] * r;
      }
    tr = std::max(tr, std::abs(s - c.scalar[p]));
  }
  CHECK(tr < 1e-10);
}

TEST_CASE("laplace_beltrami") {
  PeriodicGrid g({32, 32});
  ScalarField f = ScalarField::from_function(g, [](auto x) { return std::cos(2 * pi * x[0]); });
  SUBCASE("flat reduction") {
    ScalarField lf = laplace_beltrami(MetricField::identity(g), f);
    CHECK(sup_distance(lf, -4 * pi * pi * f) < 1e-10);
  }
  SUBCASE("constants are harmonic") {
    CHECK(laplace_beltrami(random_metric(g, 5, 2, 0.3), ScalarField(g, 2.0)).max_abs() < 1e-12);
  }
  SUBCASE("conformal metric scales the flat Laplacian") {
    ScalarField w = conformal_w(g);
    ScalarField h = ScalarField::from_function(g, [](auto x) { return std::sin(2 * pi * (x[0] + 2 * x[1])); });
    ScalarField lf = laplace_beltrami(MetricField::conformal(w), h);
    double e = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) e = std::max(e, std::abs(lf[p] + 20 * pi * pi * std::exp(-2 * w[p]) * h[p]));
    CHECK(e < 1e-9);
  }
  SUBCASE("divergence theorem") {
    PeriodicGrid g3({24, 24, 24});
    MetricField m = random_metric(g3, 9, 2, 0.3);
    ScalarField u = random_trig_field(g3, 10, 3, 1.0);
    CHECK(std::abs(integrate(laplace_beltrami(m, u), m)) < 1e-10);
  }
}

TEST_CASE("volume element and integration") {
  PeriodicGrid g2({16, 16});
  CHECK(integrate(ScalarField(g2, 1.0), MetricField::identity(g2)) == doctest::Approx(1.0).epsilon(1e-14));
  PeriodicGrid g3({8, 8, 8});
  CHECK(integrate(ScalarField(g3, 1.0), MetricField::scaled_identity(g3, 4.0)) == doctest::Approx(8.0).epsilon(1e-14));
  ScalarField c = ScalarField::from_function(g2, [](auto x) { return std::cos(2 * pi * x[0]); });
  CHECK(std::abs(integrate(c, MetricField::identity(g2))) < 1e-14);
}

TEST_CASE("integrated Bochner inequality on random metrics") {
  for (int dims : {2, 3}) {
    CAPTURE(dims);
    PeriodicGrid g(std::vector<int>(dims, dims == 2 ? 48 : 24));
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      MetricField m = random_metric(g, 100 + seed, 2, 0.35);
      ScalarField f = random_trig_field(g, 200 + seed, 2, 1.0);
      Curvature c = curvature(m);
      TensorField df = gradient(f);
      ScalarField lap = laplace_beltrami(m, f);
      ScalarField rc(g), lap2(g);
      MetricField inv = metric_inverse(m);
      TensorField up = raise_vector(inv, df);
      for (std::size_t p = 0; p < g.size(); ++p) {
        double s = 0.0;
        for (int i = 0; i < dims; ++i)
          for (int j = 0; j < dims; ++j) s += c.ricci({i, j})[p] * up.component(i)[p] * up.component(j)[p];
        rc[p] = s;
        lap2[p] = lap[p] * lap[p];
      }
      const double lhs = integrate(rc, m);
      const double rhs = (dims - 1.0) / dims * integrate(lap2, m);
      CHECK(rhs - lhs >= -1e-8);
    }
  }
}
