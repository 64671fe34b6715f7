#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "calabiflow/errors.hpp"
#include "calabiflow/fubini_study.hpp"
#include "calabiflow/kahler.hpp"
#include "calabiflow/random_fields.hpp"
#include "doctest.h"

using namespace calabi;
using std::numbers::pi;
using cvec = std::vector<cplx>;

namespace {

// A handful of seeded plane waves, evaluable both on the grid and off it.
struct Waves {
  struct Wave {
    std::vector<int> k;
    double a, phase;
  };
  std::vector<Wave> waves;

  Waves(int real_dims, std::uint64_t seed, int count, double amplitude) {
    SeededUniform r(seed);
    for (int w = 0; w < count; ++w) {
      Wave wave;
      for (int a = 0; a < real_dims; ++a) wave.k.push_back(static_cast<int>(std::lround(2.0 * r.next())));
      wave.a = amplitude * r.next() / count;
      wave.phase = pi * r.next();
      waves.push_back(wave);
    }
  }
  double operator()(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& w : waves) {
      double arg = w.phase;
      for (std::size_t a = 0; a < w.k.size(); ++a) arg += 2 * pi * w.k[a] * x[a];
      s += w.a * std::cos(arg);
    }
    return s;
  }
  double operator()(const cvec& z) const {
    std::vector<double> x;
    for (const auto& c : z) {
      x.push_back(c.real());
      x.push_back(c.imag());
    }
    return (*this)(std::span<const double>(x));
  }
};

cvec chart_point(const PeriodicGrid& g, std::size_t p) {
  std::vector<double> x(g.dims());
  g.coordinates(p, x);
  cvec z;
  for (std::size_t a = 0; a < x.size(); a += 2) z.emplace_back(x[a], x[a + 1]);
  return z;
}

double min_eigenvalue(const HermitianField& h, std::size_t p) {
  Eigen::MatrixXcd m(h.n(), h.n());
  for (int i = 0; i < h.n(); ++i)
    for (int j = 0; j < h.n(); ++j) m(i, j) = h.at(p, i, j);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

}  // namespace

TEST_CASE("complex torus grid") {
  ComplexTorusGrid g(2, 16);
  CHECK(g.real().dims() == 4);
  CHECK(g.real().total_volume() == doctest::Approx(1.0));
  CHECK_THROWS_AS(ComplexTorusGrid(0, 16), std::invalid_argument);
  CHECK_THROWS_AS(ComplexTorusGrid(2, std::vector<int>{16, 16}), std::invalid_argument);
}

TEST_CASE("complex Hessian") {
  SUBCASE("zero") {
    ComplexTorusGrid g(2, 16);
    CHECK(complex_hessian(g, ScalarField(g.real())).max_abs() == 0.0);
  }
  SUBCASE("n = 1 Wirtinger identity") {
    ComplexTorusGrid g(1, 32);
    ScalarField u = ScalarField::from_function(g.real(), [](auto x) { return std::cos(2 * pi * x[0]); });
    HermitianField h = complex_hessian(g, u);
    ScalarField expect = ScalarField::from_function(g.real(), [](auto x) { return -pi * pi * std::cos(2 * pi * x[0]); });
    CHECK(sup_distance(h.trace(), expect) < 1e-12);
  }
  SUBCASE("n = 2 against finite-difference Wirtinger derivatives") {
    ComplexTorusGrid g(2, 16);
    Waves w(4, 7, 6, 0.5);
    ScalarField u = ScalarField::from_function(g.real(), [&](auto x) { return w(x); });
    HermitianField h = complex_hessian(g, u);
    CHECK(h.hermitian_defect() <= 1e-12);
    std::function<double(const cvec&)> f = [&](const cvec& z) { return w(z); };
    double e = 0.0;
    for (std::size_t p = 0; p < g.size(); p += 977)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) e = std::max(e, std::abs(h.at(p, i, j) - wirtinger_ddbar(f, chart_point(g.real(), p), i, j, 1e-3)));
    CHECK(e < 1e-8);
  }
}

TEST_CASE("potential to metric") {
  ComplexTorusGrid g(1, 32);
  SUBCASE("zero potential gives the reference") {
    KahlerPotential p(g, ScalarField(g.real()));
    CHECK(potential_to_metric(p).field().sup_distance(HermitianField::identity(g)) == 0.0);
  }
  SUBCASE("closed form for a cosine potential") {
    const double eps = 0.01;
    KahlerPotential p(g, ScalarField::from_function(g.real(), [&](auto x) { return eps * std::cos(2 * pi * x[0]); }));
    HermitianMetricField m = potential_to_metric(p);
    ScalarField expect =
        ScalarField::from_function(g.real(), [&](auto x) { return 1.0 - eps * pi * pi * std::cos(2 * pi * x[0]); });
    CHECK(sup_distance(m.field().trace(), expect) < 1e-13);
    CHECK(m.det().inf() > 0.0);
  }
  SUBCASE("loss of positivity is reported where cos peaks") {
    const double eps = 0.2;
    KahlerPotential p(g, ScalarField::from_function(g.real(), [&](auto x) { return eps * std::cos(2 * pi * x[0]); }));
    try {
      potential_to_metric(p, 0.5);
      FAIL("expected an admissibility error");
    } catch (const AdmissibilityError& e) {
      CHECK(g.real().index(e.point(), 0) == 0);
      CHECK(e.pivot() == doctest::Approx(1.0 - eps * pi * pi));
      CHECK(e.time() == 0.5);
    }
  }
  SUBCASE("mean is removed") {
    KahlerPotential p(g, ScalarField(g.real(), 3.0));
    CHECK(p.u.max_abs() == 0.0);
  }
}

TEST_CASE("Ricci curvature") {
  SUBCASE("flat") {
    ComplexTorusGrid g(2, 8);
    CHECK(ricci(HermitianMetricField::identity(g)).max_abs() == 0.0);
  }
  SUBCASE("n = 1 cosine potential against the log series") {
    ComplexTorusGrid g(1, 64);
    auto error = [&](double eps) {
      KahlerPotential p(g, ScalarField::from_function(g.real(), [&](auto x) { return eps * std::cos(2 * pi * x[0]); }));
      HermitianField r = ricci(potential_to_metric(p));
      ScalarField series = ScalarField::from_function(g.real(), [&](auto x) {
        return -eps * std::pow(pi, 4) * std::cos(2 * pi * x[0]) - eps * eps * std::pow(pi, 6) * std::cos(4 * pi * x[0]);
      });
      return sup_distance(r.trace(), series);
    };
    const double e1 = error(0.01), e2 = error(0.005);
    CHECK(e1 / e2 == doctest::Approx(8.0).epsilon(0.05));
    CHECK(e1 < 2e5 * std::pow(0.01, 3));
  }
}

TEST_CASE("Kahler Laplacian") {
  ComplexTorusGrid g1(1, 32);
  auto flat1 = HermitianMetricField::identity(g1);
  ScalarField f = ScalarField::from_function(g1.real(), [](auto x) { return std::cos(2 * pi * x[0]); });
  CHECK(sup_distance(kahler_laplacian(flat1, f), -pi * pi * f) < 1e-12);
  CHECK(kahler_laplacian(flat1, ScalarField(g1.real(), 2.5)).max_abs() == 0.0);

  ComplexTorusGrid g(2, 16);
  HermitianMetricField g0 = potential_to_metric(KahlerPotential(g, random_trig_field(g.real(), 3, 1, 0.01)));
  KahlerPotential p(random_trig_field(g.real(), 4, 2, 0.01), g0);
  HermitianMetricField gt = potential_to_metric(p);
  ScalarField lhs = g0.trace_of(gt.field());
  ScalarField rhs = kahler_laplacian(g0, p.u);
  rhs += 2.0;
  CHECK(sup_distance(lhs, rhs) < 1e-10);
  CHECK(lhs.inf() > 0.0);
}

TEST_CASE("Monge-Ampere operator") {
  SUBCASE("zero potential") {
    ComplexTorusGrid g(2, 8);
    ScalarField yc = ma_operator(KahlerPotential(g, ScalarField(g.real())));
    CHECK(sup_distance(yc, ScalarField(g.real(), 1.0)) == 0.0);
  }
  SUBCASE("n = 1 is linear") {
    ComplexTorusGrid g(1, 32);
    KahlerPotential p(g, random_trig_field(g.real(), 9, 3, 0.005));
    ScalarField expect = complex_hessian(g, p.u).trace();
    expect += 1.0;
    CHECK(sup_distance(ma_operator(p), expect) < 1e-14);
  }
  SUBCASE("n = 2 against the cofactor determinant") {
    ComplexTorusGrid g(2, 16);
    KahlerPotential p(g, random_trig_field(g.real(), 10, 2, 0.01));
    HermitianField h = complex_hessian(g, p.u);
    ScalarField yc = ma_operator(p);
    double e = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) {
      const cplx a = 1.0 + h.at(q, 0, 0), b = h.at(q, 0, 1), c = h.at(q, 1, 0), d = 1.0 + h.at(q, 1, 1);
      e = std::max(e, std::abs((a * d - b * c).real() - yc[q]));
    }
    CHECK(e < 1e-12);
    CHECK(yc.inf() > 0.0);
  }
}

TEST_CASE("Ricci reduction identity") {
  ComplexTorusGrid g(2, 16);
  HermitianMetricField g0 = potential_to_metric(KahlerPotential(g, random_trig_field(g.real(), 21, 1, 0.02)));
  for (std::uint64_t seed : {22, 23, 24}) {
    KahlerPotential p(random_trig_field(g.real(), seed, 2, 0.01), g0);
    HermitianField lhs = ricci(potential_to_metric(p)) - ricci(g0);
    ScalarField log_yc = ma_operator(p);
    for (double& v : log_yc.values()) v = std::log(v);
    HermitianField rhs = -1.0 * complex_hessian(g, log_yc);
    CHECK(lhs.sup_distance(rhs) < 1e-9);
  }
}

TEST_CASE("two views of admissibility agree") {
  ComplexTorusGrid g(2, 8);
  for (double amp : {0.01, 0.02, 0.04, 0.08, 0.16}) {
    for (std::uint64_t seed = 30; seed < 34; ++seed) {
      KahlerPotential p(g, random_trig_field(g.real(), seed, 2, amp));
      HermitianField gt = HermitianField::identity(g) + complex_hessian(g, p.u);
      double lo = INFINITY;
      for (std::size_t q = 0; q < g.size(); ++q) lo = std::min(lo, min_eigenvalue(gt, q));
      CAPTURE(amp);
      if (lo > 1e-12) {
        CHECK(ma_operator(p).inf() > 0.0);
        ScalarField lap = kahler_laplacian(HermitianMetricField::identity(g), p.u);
        CHECK(lap.inf() > -2.0);
      } else if (lo < -1e-12) {
        CHECK_THROWS_AS(potential_to_metric(p), AdmissibilityError);
      }
    }
  }
}

TEST_CASE("Ricci is unchanged by a constant unitary change of frame") {
  ComplexTorusGrid g(2, 16);
  HermitianMetricField m = potential_to_metric(KahlerPotential(g, random_trig_field(g.real(), 40, 2, 0.01)));
  const double t = 0.7, s = 0.3;
  Eigen::Matrix2cd u;
  u << std::cos(t), -std::sin(t) * std::polar(1.0, s), std::sin(t) * std::polar(1.0, -s), std::cos(t);
  HermitianField rot(g);
  for (std::size_t q = 0; q < g.size(); ++q) {
    Eigen::Matrix2cd a;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) a(i, j) = m.at(q, i, j);
    const Eigen::Matrix2cd b = u.adjoint() * a * u;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) rot.set(q, i, j, b(i, j));
  }
  for (int i = 0; i < 2; ++i) rot.im(i, i) = RealArray(g.size(), 0.0);
  for (std::size_t q = 0; q < g.size(); ++q) rot.set(q, 1, 0, std::conj(rot.at(q, 0, 1)));
  CHECK(ricci(HermitianMetricField(rot)).sup_distance(ricci(m)) < 1e-12);
}

TEST_CASE("Hermitian metric validation and real form") {
  ComplexTorusGrid g(2, 8);
  HermitianField h = HermitianField::identity(g);
  h.set(5, 0, 1, {0.0, 0.1});
  CHECK_THROWS_AS(HermitianMetricField{h}, std::invalid_argument);
  h.set(5, 1, 0, {0.0, -0.1});
  CHECK_NOTHROW(HermitianMetricField{h});
  // det > 0 but not positive definite
  HermitianField neg = HermitianField::identity(g, -1.0);
  CHECK_THROWS_AS(HermitianMetricField{neg}, NotPositiveDefinite);

  HermitianMetricField m = potential_to_metric(KahlerPotential(g, random_trig_field(g.real(), 50, 1, 0.02)));
  MetricField r = real_metric(m);
  std::vector<double> a(16);
  for (std::size_t q = 0; q < g.size(); q += 13) {
    r.at(q, a);
    Eigen::Map<Eigen::Matrix4d> mat(a.data());
    CHECK(mat.determinant() == doctest::Approx(std::pow(4.0 * m.det()[q], 2)).epsilon(1e-12));
  }
  MetricField flat = real_metric(HermitianMetricField::identity(g));
  CHECK(flat.tensor().sup_distance(2.0 * MetricField::identity(g.real()).tensor()) == 0.0);
}

TEST_CASE("pointwise inverse") {
  for (int n = 1; n <= 3; ++n) {
    ComplexTorusGrid g(n, 8);
    HermitianMetricField m = potential_to_metric(KahlerPotential(g, random_trig_field(g.real(), 70 + n, 1, 0.02)));
    const HermitianField inv = m.inverse();
    double worst = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          cplx s = 0.0;
          for (int k = 0; k < n; ++k) s += m.at(p, i, k) * inv.at(p, k, j);
          worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
        }
    CHECK_MESSAGE(worst < 1e-14, "n = " << n);
    CHECK(inv.hermitian_defect() < 1e-15);
  }
}

TEST_CASE("Hermitian dump round trip") {
  ComplexTorusGrid g(2, 8);
  HermitianField h = complex_hessian(g, random_trig_field(g.real(), 60, 2, 0.1));
  const auto path = std::filesystem::temp_directory_path() / "calabiflow_hermitian.bin";
  write_hermitian(path, h);
  CHECK(read_hermitian(path, 2).sup_distance(h) == 0.0);
  CHECK_THROWS(read_hermitian(path, 1));
  std::filesystem::remove(path);
}

TEST_CASE("Fubini-Study") {
  CHECK((fubini_study_metric({0.0, 0.0}) - Eigen::MatrixXcd::Identity(2, 2)).norm() == 0.0);
  SeededUniform r(70);
  for (int n = 1; n <= 3; ++n)
    for (int trial = 0; trial < 4; ++trial) {
      cvec z;
      for (int i = 0; i < n; ++i) z.emplace_back(r.next(), r.next());
      FubiniStudyPoint fs = fubini_study(z);
      CAPTURE(n);
      CHECK((fs.ric - (n + 1.0) * fs.g).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((fs.g - fs.g.adjoint()).norm() == 0.0);
    }
  auto rc = fubini_study_origin_curvature(2);
  auto at = [&](int i, int j, int k, int l) { return rc[((i * 2 + j) * 2 + k) * 2 + l]; };
  CHECK(std::abs(at(0, 0, 0, 0) - 2.0) < 1e-8);
  CHECK(std::abs(at(0, 0, 1, 1) - 1.0) < 1e-8);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) CHECK(std::abs(at(i, j, k, l) - double((i == j) * (k == l) + (i == l) * (k == j))) < 1e-8);
}
