#include "calabiflow/divergence_operator.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <stdexcept>

#include "calabiflow/dense.hpp"
#include "calabiflow/errors.hpp"
#include "calabiflow/simd/kernels.hpp"

namespace calabi {

DivergenceOperator::DivergenceOperator(const PeriodicGrid& grid, std::vector<RealArray> coef)
    : grid_(grid), engine_(SpectralEngine::for_grid(grid)), coef_(std::move(coef)) {
  const int d = grid_.dims();
  if (coef_.size() != static_cast<std::size_t>(d * d))
    throw std::invalid_argument("divergence operator: expected d*d coefficient arrays");
  mean_.assign(d * d, 0.0);
  const auto& K = simd::kernels();
  for (int c = 0; c < d * d; ++c) {
    if (coef_[c].size() != grid_.size()) throw std::invalid_argument("divergence operator: coefficient size");
    mean_[c] = K.sum(coef_[c].data(), grid_.size()) / grid_.size();
  }
  flat_symbol_ = engine_->build_symbol([&](std::span<const double> k) {
    double s = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) s += mean_[a * d + b] * k[a] * k[b];
    return s;
  });
}

void DivergenceOperator::apply(const double* x, double* out) const {
  const int d = grid_.dims();
  const std::size_t n = grid_.size();
  const auto& K = simd::kernels();
  // Reused across calls: fresh 1e6-point temporaries cost more in page faults than the FFTs.
  thread_local struct {
    Spectrum spec, acc, tmp;
    std::vector<RealArray> grad;
    RealArray flux;
  } w;
  if (w.grad.size() < static_cast<std::size_t>(d)) w.grad.resize(d);
  for (int b = 0; b < d; ++b)
    if (w.grad[b].size() != n) w.grad[b].assign(n, 0.0);
  if (w.flux.size() != n) w.flux.assign(n, 0.0);
  w.acc.assign(engine_->spectrum_size(), 0.0);
  Spectrum &spec = w.spec, &acc = w.acc, &tmp = w.tmp;
  std::vector<RealArray>& grad = w.grad;
  RealArray& flux = w.flux;
  engine_->forward(x, spec);
  for (int b = 0; b < d; ++b) engine_->apply(spec, engine_->symbol(DiffOp::partial(b, 1)), grad[b].data());
  for (int a = 0; a < d; ++a) {
    std::fill(flux.begin(), flux.end(), 0.0);
    for (int b = 0; b < d; ++b) K.mul_acc(coef_[a * d + b].data(), grad[b].data(), flux.data(), n);
    engine_->forward(flux.data(), tmp);
    const Symbol& s = engine_->symbol(DiffOp::partial(a, 1));
    // acc -= i k_a * flux_hat
    for (std::size_t m = 0; m < tmp.size(); ++m) acc[m] -= tmp[m] * std::complex<double>(s.re[m], s.im[m]);
  }
  engine_->inverse(acc, out);
}

void DivergenceOperator::apply_flat_inverse(const double* r, double* out, double shift) const {
  Spectrum spec;
  engine_->forward(r, spec);
  for (std::size_t m = 0; m < spec.size(); ++m) {
    const double s = flat_symbol_.re[m] + shift;
    spec[m] = (engine_->is_null_mode(m) || s <= 0.0) ? 0.0 : spec[m] / s;
  }
  engine_->inverse(spec, out);
}

NullSpaceProjector::NullSpaceProjector(const PeriodicGrid& grid, const RealArray& mass) : mass_(&mass) {
  const int d = grid.dims();
  patterns_ = 1 << d;
  parity_.resize(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    unsigned char bits = 0;
    for (int a = 0; a < d; ++a) bits |= static_cast<unsigned char>((grid.index(p, a) & 1) << a);
    parity_[p] = bits;
  }
  std::vector<double> w(patterns_, 0.0);
  for (std::size_t p = 0; p < grid.size(); ++p) w[parity_[p]] += mass[p];
  Eigen::MatrixXd gram(patterns_, patterns_);
  for (int c = 0; c < patterns_; ++c)
    for (int e = 0; e < patterns_; ++e) {
      double s = 0.0;
      for (int P = 0; P < patterns_; ++P) s += ((std::popcount(static_cast<unsigned>((c ^ e) & P)) & 1) ? -1.0 : 1.0) * w[P];
      gram(c, e) = s;
    }
  Eigen::MatrixXd inv = gram.inverse();
  gram_inverse_.assign(inv.data(), inv.data() + patterns_ * patterns_);
}

void NullSpaceProjector::project(double* x) const {
  const std::size_t n = parity_.size();
  std::vector<double> acc(patterns_, 0.0);
  for (std::size_t p = 0; p < n; ++p) acc[parity_[p]] += (*mass_)[p] * x[p];
  auto sign = [](int c, int P) { return (std::popcount(static_cast<unsigned>(c & P)) & 1) ? -1.0 : 1.0; };
  std::vector<double> t(patterns_, 0.0), y(patterns_, 0.0), corr(patterns_, 0.0);
  for (int c = 0; c < patterns_; ++c)
    for (int P = 0; P < patterns_; ++P) t[c] += sign(c, P) * acc[P];
  for (int c = 0; c < patterns_; ++c)
    for (int e = 0; e < patterns_; ++e) y[c] += gram_inverse_[c + e * patterns_] * t[e];
  for (int P = 0; P < patterns_; ++P)
    for (int c = 0; c < patterns_; ++c) corr[P] += sign(c, P) * y[c];
  for (std::size_t p = 0; p < n; ++p) x[p] -= corr[parity_[p]];
}

DirichletForm DirichletForm::from_metric(const MetricField& g) {
  const int d = g.dim();
  const std::size_t n = g.grid().size();
  std::vector<RealArray> coef(d * d, RealArray(n));
  RealArray mass(n);
  double m[36], mi[36];
  for (std::size_t p = 0; p < n; ++p) {
    g.at(p, std::span<double>(m, d * d));
    double det = 0.0;
    if (!dense::spd_inverse(m, d, mi, &det))
      throw NotPositiveDefinite(p, dense::cholesky_min_pivot(m, d), "dirichlet form: metric not positive definite");
    const double vol = std::sqrt(det);
    mass[p] = vol;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) coef[a * d + b][p] = vol * 0.5 * (mi[a * d + b] + mi[b * d + a]);
  }
  DirichletForm form;
  form.stiffness = std::make_unique<DivergenceOperator>(g.grid(), std::move(coef));
  form.mass = std::move(mass);
  return form;
}

double DirichletForm::energy(const double* x) const {
  RealArray kx(mass.size());
  stiffness->apply(x, kx.data());
  return simd::kernels().dot(x, kx.data(), mass.size()) * stiffness->grid().cell_volume();
}

double DirichletForm::mass_norm(const double* x) const {
  return simd::kernels().weighted_dot(mass.data(), x, x, mass.size()) * stiffness->grid().cell_volume();
}

}  // namespace calabi
