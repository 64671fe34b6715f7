#include "calabiflow/ricci_flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "calabiflow/errors.hpp"
#include "calabiflow/ode.hpp"
#include "calabiflow/simd/kernels.hpp"

namespace calabi::realflow {

double HomothetySolution::scale_squared(double t) const {
  switch (kind) {
    case HomothetyKind::einstein_positive: return einstein_homothety(lambda, t, true);
    case HomothetyKind::einstein_negative: return einstein_homothety(lambda, t, false);
    case HomothetyKind::sphere: return std::pow(sphere_radius(r0, n, t), 2);
    case HomothetyKind::hyperbolic: return std::pow(hyperbolic_radius(r0, n, t), 2);
  }
  return 0.0;
}

HomothetySolution einstein_solution(double lambda, bool positive) {
  if (!(lambda > 0.0)) throw std::invalid_argument("einstein_solution: lambda must be positive");
  HomothetySolution s{positive ? HomothetyKind::einstein_positive : HomothetyKind::einstein_negative, lambda, 1.0, 2,
                      std::nullopt};
  if (positive) s.extinction_time = einstein_extinction_time(lambda);
  return s;
}

HomothetySolution sphere_solution(double r0, int n) {
  return {HomothetyKind::sphere, 0.0, r0, n, sphere_extinction_time(r0, n)};
}

HomothetySolution hyperbolic_solution(double r0, int n) {
  if (n < 2 || !(r0 > 0.0)) throw std::invalid_argument("hyperbolic_solution: need n >= 2 and r0 > 0");
  return {HomothetyKind::hyperbolic, 0.0, r0, n, std::nullopt};
}

double einstein_homothety(double lambda, double t, bool positive) {
  if (!(lambda > 0.0)) throw std::invalid_argument("einstein_homothety: lambda must be positive");
  if (positive) {
    if (t >= einstein_extinction_time(lambda))
      throw std::domain_error("einstein_homothety: t is at or beyond the extinction time 1/(2 lambda)");
    return 1.0 - 2.0 * lambda * t;
  }
  const double v = 1.0 + 2.0 * lambda * t;
  if (v <= 0.0) throw std::domain_error("einstein_homothety: scale factor not positive for this t");
  return v;
}

double einstein_extinction_time(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("einstein_extinction_time: lambda must be positive");
  return 1.0 / (2.0 * lambda);
}

double sphere_extinction_time(double r0, int n) {
  if (n < 2 || !(r0 > 0.0)) throw std::invalid_argument("sphere: need n >= 2 and r0 > 0");
  return r0 * r0 / (2.0 * (n - 1));
}

double sphere_radius(double r0, int n, double t) {
  const double T = sphere_extinction_time(r0, n);
  if (t > T) throw std::domain_error("sphere_radius: t is past the extinction time");
  return std::sqrt(std::max(0.0, r0 * r0 - 2.0 * (n - 1) * t));
}

double hyperbolic_radius(double r0, int n, double t) {
  if (n < 2 || !(r0 > 0.0)) throw std::invalid_argument("hyperbolic_radius: need n >= 2 and r0 > 0");
  if (t < 0.0) throw std::domain_error("hyperbolic_radius: t must be non-negative");
  return std::sqrt(r0 * r0 + 2.0 * (n - 1) * t);
}

ExtinctionBracket bracket_extinction(const std::function<double(double, double)>& f, double y0, double dt,
                                     double width, double t_max) {
  if (!(y0 > 0.0)) throw std::invalid_argument("bracket_extinction: initial value must be positive");
  double t = 0.0, y = y0;
  while (true) {
    if (t > t_max) throw std::runtime_error("bracket_extinction: no extinction before t_max");
    const double yn = rk4_step(f, t, y, dt);
    if (yn <= 0.0) break;
    t += dt;
    y = yn;
  }
  double lo = 0.0, hi = dt;
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    if (rk4_step(f, t, y, mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return {t + lo, t + hi};
}

TensorField soliton_residual(const MetricField& g, const TensorField& x, double lambda) {
  if (x.upper() != 1 || x.lower() != 0) throw std::invalid_argument("soliton_residual: X must be a vector field");
  require_same_grid(g.grid(), x.grid(), "soliton_residual");
  const int d = g.dim();
  const Curvature c = curvature(g);
  const TensorField gamma = christoffel(g);
  const TensorField nx = covariant_derivative(lower_vector(g, x), gamma);  // (i, j) = nabla_i X_j
  TensorField out(g.grid(), 0, 2);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      auto& o = out({i, j});
      const auto& r = c.ricci({i, j});
      const auto& gij = g(i, j);
      const auto& a = nx({i, j});
      const auto& b = nx({j, i});
      for (std::size_t p = 0; p < o.size(); ++p) o[p] = 2.0 * r[p] + 2.0 * lambda * gij[p] + a[p] + b[p];
    }
  return out;
}

// ---- conformal surface flow ----

namespace {

struct SurfaceOps {
  std::shared_ptr<const SpectralEngine> engine;
  const Symbol* laplacian;

  explicit SurfaceOps(const PeriodicGrid& grid)
      : engine(SpectralEngine::for_grid(grid)), laplacian(&engine->symbol(DiffOp::laplacian(2))) {}

  RealArray flat_laplacian(const ScalarField& w) const {
    RealArray out(w.size());
    engine->apply(engine->forward(w), *laplacian, out.data());
    return out;
  }
};

double normalization_rate(const ScalarField& w, const RealArray& lap) {
  // r = int R dmu / int dmu with R dmu = -2 Delta_0 w dx.
  double num = 0.0, den = 0.0;
  for (std::size_t p = 0; p < w.size(); ++p) {
    num += -2.0 * lap[p];
    den += std::exp(2.0 * w[p]);
  }
  return num / den;
}

ScalarField surface_rhs(const SurfaceOps& ops, const ScalarField& w, bool normalized) {
  const RealArray lap = ops.flat_laplacian(w);
  ScalarField out(w.grid());
  for (std::size_t p = 0; p < w.size(); ++p) out[p] = std::exp(-2.0 * w[p]) * lap[p];
  if (normalized) out += 0.5 * normalization_rate(w, lap);
  return out;
}

SurfaceMonitorRow surface_row(double t, const ScalarField& w) {
  const ScalarField r = conformal_scalar_curvature(w);
  double vol = 0.0;
  for (std::size_t p = 0; p < w.size(); ++p) vol += std::exp(2.0 * w[p]);
  return {t, r.sup(), r.inf(), vol * w.grid().cell_volume(), w.sup(), w.oscillation()};
}

void guard(const ScalarField& w, double bound, double t) {
  for (std::size_t p = 0; p < w.size(); ++p)
    if (!(std::abs(w[p]) <= bound))
      throw BlowUpError("conformal flow: |w| exceeded " + std::to_string(bound) + " at grid point " +
                            std::to_string(p) + ", t = " + std::to_string(t),
                        t, p, w[p]);
}

}  // namespace

ScalarField conformal_scalar_curvature(const ScalarField& w) {
  if (w.grid().dims() != 2) throw std::invalid_argument("conformal curvature: T^2 fields only");
  SurfaceOps ops(w.grid());
  const RealArray lap = ops.flat_laplacian(w);
  ScalarField r(w.grid());
  for (std::size_t p = 0; p < w.size(); ++p) r[p] = -2.0 * std::exp(-2.0 * w[p]) * lap[p];
  return r;
}

double surface_stability_bound(const ScalarField& w) {
  const PeriodicGrid& g = w.grid();
  double kmax2 = 0.0;
  for (int a = 0; a < g.dims(); ++a) {
    const double k = 2.0 * std::numbers::pi * (g.resolution(a) / 2 - 1) / g.period(a);
    kmax2 += k * k;
  }
  // Real-axis extent of the RK4 stability region.
  constexpr double kRk4RealExtent = 2.785293563405282;
  return kRk4RealExtent * std::exp(2.0 * w.inf()) / kmax2;
}

SurfaceFlowResult conformal_surface_flow(const ScalarField& w0, const SurfaceFlowOptions& opts) {
  if (w0.grid().dims() != 2) throw std::invalid_argument("conformal_surface_flow: T^2 fields only");
  if (opts.steps < 0) throw std::invalid_argument("conformal_surface_flow: negative step count");
  if (opts.record_every < 1) throw std::invalid_argument("conformal_surface_flow: record_every must be >= 1");
  const bool imex = opts.scheme == SurfaceScheme::imex;
  SurfaceOps ops(w0.grid());
  double dt = opts.dt;
  if (dt <= 0.0) dt = (imex ? 20.0 : 0.9) * surface_stability_bound(w0);
  if (!imex && dt > surface_stability_bound(w0))
    throw std::invalid_argument("conformal_surface_flow: dt exceeds the explicit stability bound");

  SurfaceFlowResult res;
  res.dt = dt;
  ScalarField w = w0;
  guard(w, opts.blowup_bound, 0.0);
  auto record = [&](double t) {
    res.monitors.push_back(surface_row(t, w));
    res.times.push_back(t);
    if (opts.keep_trajectory) res.trajectory.push_back(w);
  };
  record(0.0);
  const auto& K = simd::kernels();
  const std::size_t n = w.size();
  for (int s = 1; s <= opts.steps; ++s) {
    const double t = s * dt;
    if (!imex) {
      if (dt > surface_stability_bound(w))
        throw std::runtime_error("conformal_surface_flow: dt left the stability region at t = " + std::to_string(t));
      ScalarField k1 = surface_rhs(ops, w, opts.normalized);
      ScalarField tmp = w;
      K.axpy(0.5 * dt, k1.data(), tmp.data(), n);
      ScalarField k2 = surface_rhs(ops, tmp, opts.normalized);
      tmp = w;
      K.axpy(0.5 * dt, k2.data(), tmp.data(), n);
      ScalarField k3 = surface_rhs(ops, tmp, opts.normalized);
      tmp = w;
      K.axpy(dt, k3.data(), tmp.data(), n);
      ScalarField k4 = surface_rhs(ops, tmp, opts.normalized);
      K.axpy(dt / 6.0, k1.data(), w.data(), n);
      K.axpy(dt / 3.0, k2.data(), w.data(), n);
      K.axpy(dt / 3.0, k3.data(), w.data(), n);
      K.axpy(dt / 6.0, k4.data(), w.data(), n);
    } else {
      // (1 - dt sigma Delta_0) w' = w + dt (e^{-2w} - sigma) Delta_0 w + dt r / 2
      const RealArray lap = ops.flat_laplacian(w);
      double sigma = 0.0;
      for (std::size_t p = 0; p < n; ++p) sigma = std::max(sigma, std::exp(-2.0 * w[p]));
      sigma *= 0.5;
      const double shift = opts.normalized ? 0.5 * normalization_rate(w, lap) : 0.0;
      ScalarField rhs = w;
      for (std::size_t p = 0; p < n; ++p) rhs[p] += dt * ((std::exp(-2.0 * w[p]) - sigma) * lap[p] + shift);
      Spectrum spec = ops.engine->forward(rhs);
      const Symbol& L = *ops.laplacian;
      for (std::size_t m = 0; m < spec.size(); ++m) spec[m] /= (1.0 - dt * sigma * L.re[m]);
      w = ops.engine->inverse(spec);
    }
    guard(w, opts.blowup_bound, t);
    res.steps_taken = s;
    const bool last = s == opts.steps;
    bool stop = false;
    if (opts.stop_sup_r > 0.0) stop = conformal_scalar_curvature(w).max_abs() < opts.stop_sup_r;
    if (s % opts.record_every == 0 || last || stop) record(t);
    if (stop) break;
  }
  res.final_w = w;
  return res;
}

std::string surface_csv_header() { return "t,sup_R,inf_R,volume,sup_w,osc_w"; }

std::string surface_csv_row(const SurfaceMonitorRow& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.t << ',' << r.sup_r << ',' << r.inf_r << ',' << r.volume << ',' << r.sup_w << ',' << r.osc_w;
  return os.str();
}

std::vector<double> normalized_rescale(const std::vector<double>& volumes, int n) {
  if (n < 1) throw std::invalid_argument("normalized_rescale: n must be positive");
  if (volumes.empty()) return {};
  for (double v : volumes)
    if (!(v > 0.0)) throw std::domain_error("normalized_rescale: volumes must be positive");
  std::vector<double> psi;
  psi.reserve(volumes.size());
  for (double v : volumes) psi.push_back(std::pow(v / volumes.front(), -2.0 / n));
  psi.front() = 1.0;
  return psi;
}

}  // namespace calabi::realflow
