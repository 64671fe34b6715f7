#include "calabiflow/kahler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "calabiflow/errors.hpp"
#include "calabiflow/grid_io.hpp"
#include "calabiflow/simd/kernels.hpp"

namespace calabi {
namespace {

std::vector<int> repeat(int n, int resolution) { return std::vector<int>(2 * n, resolution); }

// Cholesky of a Hermitian n x n matrix. Returns the smallest pivot (<= 0 or NaN
// when not PD) and accumulates log det.
double herm_cholesky(const cplx* a, int n, double* logdet) {
  cplx l[kMaxComplexDim * kMaxComplexDim];
  double min_pivot = INFINITY;
  double ld = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = a[j * n + j].real();
    for (int k = 0; k < j; ++k) s -= std::norm(l[j * n + k]);
    if (!(s > 0.0)) return s;
    min_pivot = std::min(min_pivot, s);
    ld += std::log(s);
    const double ljj = std::sqrt(s);
    l[j * n + j] = ljj;
    for (int i = j + 1; i < n; ++i) {
      cplx t = a[i * n + j];
      for (int k = 0; k < j; ++k) t -= l[i * n + k] * std::conj(l[j * n + k]);
      l[i * n + j] = t / ljj;
    }
  }
  if (logdet) *logdet = ld;
  return min_pivot;
}

void require_grid(const ComplexTorusGrid& g, const PeriodicGrid& real, const char* where) {
  if (!(g.real() == real)) throw std::invalid_argument(std::string(where) + ": field lives on a different grid");
}

}  // namespace

ComplexTorusGrid::ComplexTorusGrid(int n, int resolution) : ComplexTorusGrid(n, repeat(n, resolution)) {}

ComplexTorusGrid::ComplexTorusGrid(int n, std::vector<int> resolution) : n_(n) {
  if (n < 1 || n > kMaxComplexDim) throw std::invalid_argument("ComplexTorusGrid: complex dimension must be 1..3");
  if (static_cast<int>(resolution.size()) != 2 * n)
    throw std::invalid_argument("ComplexTorusGrid: need one resolution per real axis");
  grid_ = PeriodicGrid(std::move(resolution));
}

HermitianField::HermitianField(const ComplexTorusGrid& grid)
    : grid_(grid),
      re_(static_cast<std::size_t>(grid.n() * grid.n()), RealArray(grid.size(), 0.0)),
      im_(static_cast<std::size_t>(grid.n() * grid.n()), RealArray(grid.size(), 0.0)) {}

void HermitianField::matrix(std::size_t p, cplx* m) const {
  const int nn = n() * n();
  for (int c = 0; c < nn; ++c) m[c] = {re_[c][p], im_[c][p]};
}

HermitianField HermitianField::identity(const ComplexTorusGrid& grid, double scale) {
  HermitianField h(grid);
  for (int i = 0; i < grid.n(); ++i) std::fill(h.re(i, i).begin(), h.re(i, i).end(), scale);
  return h;
}

double HermitianField::hermitian_defect() const {
  double e = 0.0;
  for (int i = 0; i < n(); ++i)
    for (int j = i; j < n(); ++j)
      for (std::size_t p = 0; p < size(); ++p) {
        e = std::max(e, std::abs(re(i, j)[p] - re(j, i)[p]));
        e = std::max(e, std::abs(im(i, j)[p] + im(j, i)[p]));
      }
  return e;
}

double HermitianField::max_abs() const {
  double m = 0.0;
  for (std::size_t c = 0; c < re_.size(); ++c)
    for (std::size_t p = 0; p < size(); ++p) m = std::max(m, std::hypot(re_[c][p], im_[c][p]));
  return m;
}

double HermitianField::sup_distance(const HermitianField& o) const {
  if (!(grid_ == o.grid_)) throw std::invalid_argument("HermitianField: grid mismatch");
  double m = 0.0;
  for (std::size_t c = 0; c < re_.size(); ++c)
    for (std::size_t p = 0; p < size(); ++p)
      m = std::max(m, std::hypot(re_[c][p] - o.re_[c][p], im_[c][p] - o.im_[c][p]));
  return m;
}

ScalarField HermitianField::trace() const {
  ScalarField t(grid_.real());
  for (int i = 0; i < n(); ++i)
    for (std::size_t p = 0; p < size(); ++p) t[p] += re(i, i)[p];
  return t;
}

HermitianField& HermitianField::operator+=(const HermitianField& o) {
  if (!(grid_ == o.grid_)) throw std::invalid_argument("HermitianField: grid mismatch");
  const auto& k = simd::kernels();
  for (std::size_t c = 0; c < re_.size(); ++c) {
    k.axpy(1.0, o.re_[c].data(), re_[c].data(), size());
    k.axpy(1.0, o.im_[c].data(), im_[c].data(), size());
  }
  return *this;
}

HermitianField& HermitianField::operator-=(const HermitianField& o) {
  if (!(grid_ == o.grid_)) throw std::invalid_argument("HermitianField: grid mismatch");
  const auto& k = simd::kernels();
  for (std::size_t c = 0; c < re_.size(); ++c) {
    k.axpy(-1.0, o.re_[c].data(), re_[c].data(), size());
    k.axpy(-1.0, o.im_[c].data(), im_[c].data(), size());
  }
  return *this;
}

HermitianField& HermitianField::operator*=(double s) {
  for (auto* part : {&re_, &im_})
    for (auto& a : *part)
      for (double& v : a) v *= s;
  return *this;
}

HermitianField operator+(HermitianField a, const HermitianField& b) { return a += b; }
HermitianField operator-(HermitianField a, const HermitianField& b) { return a -= b; }
HermitianField operator*(double s, HermitianField a) { return a *= s; }

HermitianMetricField::HermitianMetricField(HermitianField g) : g_(std::move(g)), det_(g_.grid().real()) {
  if (g_.hermitian_defect() > 1e-12) throw std::invalid_argument("HermitianMetricField: matrix is not Hermitian");
  const std::size_t np = g_.size();
  const int n = g_.n();
  if (n == 1) {
    const RealArray& a = g_.re(0, 0);
    for (std::size_t p = 0; p < np; ++p) {
      if (!(a[p] > 0.0))
        throw NotPositiveDefinite(p, a[p], "Hermitian metric not positive definite at point " + std::to_string(p));
      det_[p] = a[p];
    }
    return;
  }
  if (n == 2) {
    const std::size_t bad = simd::kernels().herm2_det(g_.re(0, 0).data(), g_.re(1, 1).data(), g_.re(0, 1).data(),
                                                      g_.im(0, 1).data(), det_.data(), np);
    if (bad < np) {
      const double a = g_.re(0, 0)[bad];
      const double pivot = a > 0.0 ? det_[bad] / a : a;
      throw NotPositiveDefinite(bad, pivot, "Hermitian metric not positive definite at point " + std::to_string(bad));
    }
    return;
  }
  cplx m[kMaxComplexDim * kMaxComplexDim];
  for (std::size_t p = 0; p < np; ++p) {
    g_.matrix(p, m);
    double ld = 0.0;
    const double pivot = herm_cholesky(m, n, &ld);
    if (!(pivot > 0.0))
      throw NotPositiveDefinite(p, pivot, "Hermitian metric not positive definite at point " + std::to_string(p));
    det_[p] = std::exp(ld);
  }
}

HermitianMetricField HermitianMetricField::identity(const ComplexTorusGrid& grid) {
  return HermitianMetricField(HermitianField::identity(grid));
}

ScalarField HermitianMetricField::log_det() const {
  ScalarField l = det_;
  for (double& v : l.values()) v = std::log(v);
  return l;
}

ScalarField HermitianMetricField::trace_of(const HermitianField& f) const {
  if (!(f.grid() == grid())) throw std::invalid_argument("trace_of: grid mismatch");
  const std::size_t np = g_.size();
  const int n = g_.n();
  ScalarField out(grid().real());
  if (n == 1) {
    for (std::size_t p = 0; p < np; ++p) out[p] = f.re(0, 0)[p] / g_.re(0, 0)[p];
    return out;
  }
  if (n == 2) {
    simd::kernels().herm2_adj_trace(g_.re(0, 0).data(), g_.re(1, 1).data(), g_.re(0, 1).data(), g_.im(0, 1).data(),
                                    f.re(0, 0).data(), f.re(1, 1).data(), f.re(0, 1).data(), f.im(0, 1).data(),
                                    out.data(), np);
    for (std::size_t p = 0; p < np; ++p) out[p] /= det_[p];
    return out;
  }
  HermitianField inv = inverse();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (std::size_t p = 0; p < np; ++p)
        out[p] += inv.re(j, i)[p] * f.re(i, j)[p] - inv.im(j, i)[p] * f.im(i, j)[p];
  return out;
}

HermitianField HermitianMetricField::inverse() const {
  const int n = g_.n();
  HermitianField inv(grid());
  const std::size_t np = g_.size();
  // Adjugate over determinant for n <= 2; det_ is already on hand.
  if (n == 1) {
    const RealArray& a = g_.re(0, 0);
    RealArray& r = inv.re(0, 0);
    for (std::size_t p = 0; p < np; ++p) r[p] = 1.0 / a[p];
    return inv;
  }
  if (n == 2) {
    const RealArray &a = g_.re(0, 0), &d = g_.re(1, 1), &br = g_.re(0, 1), &bi = g_.im(0, 1);
    RealArray &r00 = inv.re(0, 0), &r11 = inv.re(1, 1), &r01 = inv.re(0, 1), &i01 = inv.im(0, 1);
    RealArray &r10 = inv.re(1, 0), &i10 = inv.im(1, 0);
    for (std::size_t p = 0; p < np; ++p) {
      const double s = 1.0 / det_[p];
      r00[p] = d[p] * s;
      r11[p] = a[p] * s;
      r01[p] = -br[p] * s;
      i01[p] = -bi[p] * s;
      r10[p] = r01[p];
      i10[p] = -i01[p];
    }
    return inv;
  }
  Eigen::MatrixXcd m(n, n);
  for (std::size_t p = 0; p < np; ++p) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = g_.at(p, i, j);
    const Eigen::MatrixXcd mi = m.llt().solve(Eigen::MatrixXcd::Identity(n, n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) inv.set(p, i, j, mi(i, j));
  }
  return inv;
}

void HermitianMetricField::eigenvalue_bounds(ScalarField& lo, ScalarField& hi) const {
  const std::size_t np = g_.size();
  const int n = g_.n();
  lo = ScalarField(grid().real());
  hi = ScalarField(grid().real());
  if (n == 1) {
    for (std::size_t p = 0; p < np; ++p) lo[p] = hi[p] = g_.re(0, 0)[p];
    return;
  }
  if (n == 2) {
    simd::kernels().herm2_eigs(g_.re(0, 0).data(), g_.re(1, 1).data(), g_.re(0, 1).data(), g_.im(0, 1).data(),
                               lo.data(), hi.data(), np);
    return;
  }
  Eigen::MatrixXcd m(n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
  for (std::size_t p = 0; p < np; ++p) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = g_.at(p, i, j);
    es.compute(m, Eigen::EigenvaluesOnly);
    lo[p] = es.eigenvalues()(0);
    hi[p] = es.eigenvalues()(n - 1);
  }
}

KahlerPotential::KahlerPotential(ScalarField u_in, HermitianMetricField g, bool recenter)
    : grid(g.grid()), u(std::move(u_in)), g0(std::move(g)) {
  require_grid(grid, u.grid(), "KahlerPotential");
  if (recenter) u += -u.mean();
}

KahlerPotential::KahlerPotential(const ComplexTorusGrid& g, ScalarField u_in)
    : KahlerPotential(std::move(u_in), HermitianMetricField::identity(g)) {}

HermitianField complex_hessian(const ComplexTorusGrid& grid, const ScalarField& u) {
  require_grid(grid, u.grid(), "complex_hessian");
  return complex_hessian(grid, SpectralEngine::for_grid(grid.real())->forward(u));
}

HermitianField complex_hessian(const ComplexTorusGrid& grid, const Spectrum& u_hat) {
  const auto engine = SpectralEngine::for_grid(grid.real());
  const int n = grid.n();
  HermitianField h(grid);
  for (int i = 0; i < n; ++i) {
    const int xi = ComplexTorusGrid::x_axis(i), yi = ComplexTorusGrid::y_axis(i);
    for (int j = i; j < n; ++j) {
      const int xj = ComplexTorusGrid::x_axis(j), yj = ComplexTorusGrid::y_axis(j);
      const DiffOp re_op = (DiffOp::mixed(xi, xj) + DiffOp::mixed(yi, yj)) * 0.25;
      engine->apply(u_hat, engine->symbol(re_op), h.re(i, j).data());
      if (i == j) continue;
      const DiffOp im_op = (DiffOp::mixed(xi, yj) - DiffOp::mixed(yi, xj)) * 0.25;
      engine->apply(u_hat, engine->symbol(im_op), h.im(i, j).data());
      h.re(j, i) = h.re(i, j);
      h.im(j, i) = h.im(i, j);
      for (double& v : h.im(j, i)) v = -v;
    }
  }
  return h;
}

HermitianMetricField potential_to_metric(const KahlerPotential& p, double time) {
  HermitianField g = p.g0.field();
  g += complex_hessian(p.grid, p.u);
  try {
    return HermitianMetricField(std::move(g));
  } catch (const NotPositiveDefinite& e) {
    throw AdmissibilityError(e.point(), e.pivot(), time,
                             "potential is not admissible at point " + std::to_string(e.point()) +
                                 " (t = " + std::to_string(time) + ")");
  }
}

HermitianField ricci(const HermitianMetricField& g) {
  HermitianField r = complex_hessian(g.grid(), g.log_det());
  r *= -1.0;
  return r;
}

ScalarField kahler_laplacian(const HermitianMetricField& g, const ScalarField& f) {
  require_grid(g.grid(), f.grid(), "kahler_laplacian");
  return g.trace_of(complex_hessian(g.grid(), f));
}

ScalarField ma_operator(const KahlerPotential& p) {
  const HermitianMetricField gt = potential_to_metric(p);
  ScalarField yc = gt.det();
  const ScalarField& d0 = p.g0.det();
  for (std::size_t q = 0; q < yc.size(); ++q) yc[q] /= d0[q];
  return yc;
}

MetricField real_metric(const HermitianMetricField& g) {
  const int n = g.n();
  TensorField t(g.grid().real(), 0, 2);
  const HermitianField& h = g.field();
  for (int i = 0; i < n; ++i) {
    const int xi = ComplexTorusGrid::x_axis(i), yi = ComplexTorusGrid::y_axis(i);
    for (int j = 0; j < n; ++j) {
      const int xj = ComplexTorusGrid::x_axis(j), yj = ComplexTorusGrid::y_axis(j);
      RealArray& xx = t({xi, xj});
      RealArray& yy = t({yi, yj});
      RealArray& xy = t({xi, yj});
      RealArray& yx = t({yi, xj});
      for (std::size_t p = 0; p < h.size(); ++p) {
        xx[p] = yy[p] = 2.0 * h.re(i, j)[p];
        xy[p] = 2.0 * h.im(i, j)[p];
        yx[p] = -2.0 * h.im(i, j)[p];
      }
    }
  }
  return MetricField(std::move(t));
}

void write_hermitian(const std::filesystem::path& path, const HermitianField& h) {
  std::vector<const RealArray*> parts;
  for (int i = 0; i < h.n(); ++i)
    for (int j = i; j < h.n(); ++j) {
      parts.push_back(&h.re(i, j));
      parts.push_back(&h.im(i, j));
    }
  write_grid_dump(path, h.grid().real(), parts);
}

HermitianField read_hermitian(const std::filesystem::path& path, int n) {
  const GridDump dump = read_grid_dump(path);
  ComplexTorusGrid grid(n, dump.grid.resolutions());
  if (!(grid.real() == dump.grid) || dump.components != n * (n + 1))
    throw std::runtime_error("read_hermitian: dump does not hold a Hermitian field of dimension " + std::to_string(n));
  HermitianField h(grid);
  int c = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j, c += 2)
      for (std::size_t p = 0; p < h.size(); ++p) {
        const cplx v(dump.at(p, c), dump.at(p, c + 1));
        h.set(p, i, j, v);
        if (i != j) h.set(p, j, i, std::conj(v));
      }
  return h;
}

}  // namespace calabi
