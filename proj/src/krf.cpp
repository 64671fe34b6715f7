#include "calabiflow/krf.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "calabiflow/errors.hpp"
#include "calabiflow/grid_io.hpp"
#include "calabiflow/simd/kernels.hpp"

namespace calabi {
namespace {

ScalarField rhs_from_metric(const HermitianMetricField& gt, const KahlerPotential& p, const ScalarField& f) {
  ScalarField F(f.grid());
  const ScalarField& det = gt.det();
  const ScalarField& det0 = p.g0.det();
  for (std::size_t q = 0; q < F.size(); ++q) F[q] = std::log(det[q] / det0[q]) + f[q];
  return F;
}

double min_eigenvalue_at(const KahlerPotential& p, std::size_t point) {
  const HermitianField h = p.g0.field() + complex_hessian(p.grid, p.u);
  const int n = p.grid.n();
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = h.at(point, i, j);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

int max_resolution(const PeriodicGrid& g) {
  return *std::max_element(g.resolutions().begin(), g.resolutions().end());
}

}  // namespace

FlowScheme parse_flow_scheme(const std::string& name) {
  if (name == "explicit-rk4") return FlowScheme::explicit_rk4;
  if (name == "imex") return FlowScheme::imex;
  throw std::invalid_argument("unknown flow scheme '" + name + "' (expected explicit-rk4 or imex)");
}

std::string to_string(FlowScheme s) { return s == FlowScheme::imex ? "imex" : "explicit-rk4"; }

ScalarField flow_rhs(const KahlerPotential& p, const ScalarField& f, double time) {
  if (!(p.grid.real() == f.grid())) throw std::invalid_argument("flow_rhs: grid mismatch");
  return rhs_from_metric(potential_to_metric(p, time), p, f);
}

FlowState::FlowState(KahlerPotential u0, const ScalarField& f) : u(std::move(u0)) {
  if (!(u.grid.real() == f.grid())) throw std::invalid_argument("FlowState: grid mismatch");
  gt = potential_to_metric(u, t);
  F = rhs_from_metric(gt, u, f);
}

double explicit_time_step(const FlowState& s) {
  const HermitianField inv = s.gt.inverse();
  const double max_trace = inv.trace().sup();
  const double half = 0.5 * max_resolution(s.grid().real());
  const double h2 = 1.0 / (4.0 * max_trace * half * half);
  // RK4 reaches 2.785 on the negative real axis; the linearization is g~^{i jbar} d_i d_jbar.
  ScalarField lo, hi;
  s.gt.eigenvalue_bounds(lo, hi);
  const double inv_max = 1.0 / lo.inf();
  const auto& grid = s.grid().real();
  double k2 = 0.0;
  for (int a = 0; a < grid.dims(); ++a) {
    const double k = 2.0 * M_PI * (grid.resolution(a) / 2 - 1) / grid.period(a);
    k2 += k * k;
  }
  const double rk4 = 2.785 / (inv_max * 0.25 * k2);
  return std::min(0.2 * h2, 0.95 * rk4);
}

double imex_time_step(const FlowState& s, double factor) { return factor * explicit_time_step(s); }

void step(FlowState& s, const ScalarField& f, FlowScheme scheme, double min_dt) {
  if (!(s.dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  if (s.dt < min_dt) throw std::underflow_error("step: dt below the minimum step");
  const auto& ker = simd::kernels();
  const std::size_t np = s.u.u.size();
  double dt = s.dt;
  for (;;) {
    try {
      ScalarField next = s.u.u;
      if (scheme == FlowScheme::explicit_rk4) {
        auto stage = [&](const ScalarField& base, const ScalarField& k, double c) {
          ScalarField v = base;
          ker.axpy(c, k.data(), v.data(), np);
          return flow_rhs(KahlerPotential(std::move(v), s.u.g0, false), f, s.t);
        };
        const ScalarField& k1 = s.F;
        const ScalarField k2 = stage(s.u.u, k1, 0.5 * dt);
        const ScalarField k3 = stage(s.u.u, k2, 0.5 * dt);
        const ScalarField k4 = stage(s.u.u, k3, dt);
        ker.axpy(dt / 6.0, k1.data(), next.data(), np);
        ker.axpy(dt / 3.0, k2.data(), next.data(), np);
        ker.axpy(dt / 3.0, k3.data(), next.data(), np);
        ker.axpy(dt / 6.0, k4.data(), next.data(), np);
      } else {
        // (1 - dt sigma L0) u' = u + dt (F(u) - sigma L0 u), L0 the flat Kahler Laplacian,
        // reduces to u' = u + dt (1 - dt sigma L0)^{-1} F(u).
        ScalarField lo, hi;
        s.gt.eigenvalue_bounds(lo, hi);
        const double sigma = std::max(1.0, 1.0 / lo.inf());
        const auto engine = SpectralEngine::for_grid(f.grid());
        Spectrum fh = engine->forward(s.F);
        const Symbol& lap = engine->symbol(DiffOp::laplacian(f.grid().dims()));
        for (std::size_t m = 0; m < fh.size(); ++m) fh[m] /= 1.0 - dt * sigma * 0.25 * lap.re[m];
        ScalarField inc = engine->inverse(fh);
        ker.axpy(dt, inc.data(), next.data(), np);
      }
      const double mean = next.mean();
      next += -mean;
      KahlerPotential p(std::move(next), s.u.g0, false);
      HermitianMetricField gt = potential_to_metric(p, s.t + dt);
      s.F = rhs_from_metric(gt, p, f);
      s.gt = std::move(gt);
      s.u = std::move(p);
      s.drift += mean;
      s.t += dt;
      ++s.steps;
      return;
    } catch (const AdmissibilityError& e) {
      dt *= 0.5;
      if (dt < min_dt) {
        std::ostringstream msg;
        msg << std::setprecision(10) << "flow lost admissibility at t = " << s.t << ", point " << e.point()
            << ", min eigenvalue of the current metric " << min_eigenvalue_at(s.u, e.point())
            << " (step size underflow after halving)";
        throw AdmissibilityError(e.point(), e.pivot(), s.t, msg.str());
      }
    }
  }
}

void FlowConfig::validate() const {
  if (dt < 0.0) throw std::invalid_argument("dt must be non-negative");
  if (!(imex_factor > 0.0)) throw std::invalid_argument("imex_factor must be positive");
  if (!(stop_tol > 0.0)) throw std::invalid_argument("stop_tol must be positive");
  if (!(residual_tol > 0.0)) throw std::invalid_argument("residual_tol must be positive");
  if (max_steps < 0) throw std::invalid_argument("max_steps must be non-negative");
  if (record_every < 1) throw std::invalid_argument("record_every must be positive");
  if (monitors.lambda_every < 1) throw std::invalid_argument("lambda_every must be positive");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be non-negative");
  if (checkpoint_every > 0 && checkpoint_dir.empty()) throw std::invalid_argument("checkpoint_dir is required");
}

FlowResult run_flow(const ScalarField& f, const ComplexTorusGrid& grid, const FlowConfig& cfg) {
  cfg.validate();
  FlowState s(KahlerPotential(grid, ScalarField(grid.real())), f);
  MonitorContext ctx(cfg.monitors);
  FlowResult out{s, 0.0, 0.0, {}};
  auto record = [&](bool final_row) {
    if (cfg.record_monitors) out.monitors.push_back(ctx.update(s, f, final_row));
  };
  auto checkpoint = [&] {
    if (cfg.checkpoint_every > 0 && s.steps % cfg.checkpoint_every == 0) {
      std::filesystem::create_directories(cfg.checkpoint_dir);
      std::ostringstream name;
      name << "u_" << std::setw(7) << std::setfill('0') << s.steps << ".bin";
      write_scalar(cfg.checkpoint_dir / name.str(), s.u.u);
    }
  };
  record(false);
  while (s.F.oscillation() >= cfg.stop_tol) {
    if (s.steps >= cfg.max_steps)
      throw ConvergenceError("flow did not settle within max_steps", static_cast<int>(s.steps), s.F.oscillation());
    if (cfg.dt > 0.0)
      s.dt = cfg.dt;
    else
      s.dt = cfg.scheme == FlowScheme::imex ? imex_time_step(s, cfg.imex_factor) : explicit_time_step(s);
    step(s, f, cfg.scheme);
    checkpoint();
    if (s.steps % cfg.record_every == 0 && s.F.oscillation() >= cfg.stop_tol) record(false);
  }
  record(true);
  // c_bar: dV~-weighted mean of F at termination.
  const auto& ker = simd::kernels();
  const ScalarField& det = s.gt.det();
  out.c_bar = ker.dot(det.data(), s.F.data(), det.size()) / ker.sum(det.data(), det.size());
  double res = 0.0;
  for (std::size_t q = 0; q < f.size(); ++q) res = std::max(res, std::abs(s.F[q] - out.c_bar));
  out.limit_residual = res;
  out.state = std::move(s);
  if (!(res < cfg.residual_tol))
    throw ConvergenceError("flow limit residual above residual_tol", static_cast<int>(out.state.steps), res);
  return out;
}

}  // namespace calabi
