#include "calabiflow/ma_elliptic.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "calabiflow/divergence_operator.hpp"
#include "calabiflow/simd/kernels.hpp"

namespace calabi {
namespace {

struct Evaluation {
  HermitianMetricField gt;
  ScalarField residual;
  double log_a = 0.0;
  double sup = 0.0;
};

Evaluation evaluate(const KahlerPotential& p, const ScalarField& f, double t, const ContinuityConfig& cfg,
                    double fixed_log_a) {
  Evaluation e{potential_to_metric(p, t), ScalarField(f.grid()), 0.0, 0.0};
  const ScalarField& det = e.gt.det();
  const ScalarField& det0 = p.g0.det();
  ScalarField& r = e.residual;
  for (std::size_t q = 0; q < r.size(); ++q) r[q] = std::log(det[q] / det0[q]) - cfg.c * p.u[q] - t * f[q];
  if (cfg.c > 0.0) {
    e.log_a = fixed_log_a;
  } else {
    // Weighted by dV~ so that the Newton right-hand side is solvable.
    const auto& k = simd::kernels();
    e.log_a = k.dot(det.data(), r.data(), r.size()) / k.sum(det.data(), r.size());
  }
  r += -e.log_a;
  e.sup = r.max_abs();
  return e;
}

// Real coefficients of u -> sum_ij Q_ij d_i d_jbar u in divergence form, with
// Q = det(g~) conj(g~^{-1}), the transposed adjugate.
std::vector<RealArray> adjugate_coefficients(const HermitianMetricField& gt) {
  const int n = gt.n();
  const int d = 2 * n;
  const std::size_t np = gt.grid().size();
  HermitianField q(gt.grid());
  const HermitianField& g = gt.field();
  if (n == 1) {
    q.re(0, 0) = RealArray(np, 1.0);
  } else if (n == 2) {
    q.re(0, 0) = g.re(1, 1);
    q.re(1, 1) = g.re(0, 0);
    for (std::size_t p = 0; p < np; ++p) {
      q.re(0, 1)[p] = -g.re(0, 1)[p];
      q.im(0, 1)[p] = g.im(0, 1)[p];
    }
  } else {
    const HermitianField inv = gt.inverse();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (std::size_t p = 0; p < np; ++p) q.set(p, i, j, gt.det()[p] * std::conj(inv.at(p, i, j)));
  }
  std::vector<RealArray> coef(static_cast<std::size_t>(d * d), RealArray(np, 0.0));
  auto c = [&](int a, int b) -> RealArray& { return coef[a * d + b]; };
  for (int i = 0; i < n; ++i) {
    const int xi = ComplexTorusGrid::x_axis(i), yi = ComplexTorusGrid::y_axis(i);
    for (int j = 0; j < n; ++j) {
      const int xj = ComplexTorusGrid::x_axis(j), yj = ComplexTorusGrid::y_axis(j);
      // Q_ij is the (i, j) entry for i <= j; below the diagonal use conj(Q_ji).
      const bool upper = i <= j;
      const RealArray& qre = upper ? q.re(i, j) : q.re(j, i);
      const RealArray& qim = upper ? q.im(i, j) : q.im(j, i);
      const double sgn = upper ? 1.0 : -1.0;
      for (std::size_t p = 0; p < np; ++p) {
        c(xi, xj)[p] = c(yi, yj)[p] = 0.25 * qre[p];
        c(xi, yj)[p] = -0.25 * sgn * qim[p];
      }
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(ComplexTorusGrid::y_axis(j), ComplexTorusGrid::x_axis(i)) = c(ComplexTorusGrid::x_axis(i), ComplexTorusGrid::y_axis(j));
  return coef;
}

// Preconditioned CG for (K + shift diag(w)) x = b, K the divergence operator.
RealArray solve_linear(const DivergenceOperator& k, const RealArray& w, double shift, const RealArray& b,
                       const NullSpaceProjector* null_proj, const ContinuityConfig& cfg) {
  const std::size_t n = b.size();
  const auto& ker = simd::kernels();
  RealArray x(n, 0.0), r = b, z(n), p(n), ap(n);
  const double bnorm = std::sqrt(ker.dot(b.data(), b.data(), n));
  if (bnorm == 0.0) return x;
  double mean_w = 0.0;
  if (shift > 0.0) mean_w = ker.sum(w.data(), n) / static_cast<double>(n);
  const NullSpaceProjector* proj = null_proj;
  auto precondition = [&](const RealArray& in, RealArray& out) {
    k.apply_flat_inverse(in.data(), out.data(), shift * mean_w);
    if (shift > 0.0 && proj) {
      // The flat inverse ignores the derivative null modes; they only see the shift.
      RealArray rest = in;
      proj->project(rest.data());
      for (std::size_t i = 0; i < n; ++i) out[i] += (in[i] - rest[i]) / (shift * mean_w);
    }
  };
  auto apply = [&](const RealArray& in, RealArray& out) {
    k.apply(in.data(), out.data());
    if (shift > 0.0)
      for (std::size_t i = 0; i < n; ++i) out[i] += shift * w[i] * in[i];
  };
  precondition(r, z);
  p = z;
  double rz = ker.dot(r.data(), z.data(), n);
  for (int it = 0; it < cfg.linear_max_iters; ++it) {
    apply(p, ap);
    const double pap = ker.dot(p.data(), ap.data(), n);
    if (!(pap > 0.0)) throw ConvergenceError("linear solve: operator lost positivity", it, std::sqrt(rz));
    const double alpha = rz / pap;
    ker.axpy(alpha, p.data(), x.data(), n);
    ker.axpy(-alpha, ap.data(), r.data(), n);
    const double rnorm = std::sqrt(ker.dot(r.data(), r.data(), n));
    if (rnorm <= cfg.linear_tol * bnorm) return x;
    precondition(r, z);
    const double rz_new = ker.dot(r.data(), z.data(), n);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw ConvergenceError("linear solve stagnated", cfg.linear_max_iters, 0.0);
}

std::shared_ptr<const MASolution> snapshot(const KahlerPotential& u, double log_a, double sup, double t, int iters,
                                           const std::vector<double>& history) {
  auto s = std::make_shared<MASolution>(MASolution{u, std::exp(log_a), sup, t, iters, {}, {}, history});
  return s;
}

}  // namespace

std::vector<double> ContinuityConfig::path() const {
  if (!t_steps.empty()) return t_steps;
  std::vector<double> p;
  for (int i = 0; i <= 10; ++i) p.push_back(i / 10.0);
  return p;
}

void ContinuityConfig::validate() const {
  const auto p = path();
  if (p.front() != 0.0 || p.back() != 1.0) throw std::invalid_argument("continuity path must run from 0 to 1");
  for (std::size_t i = 1; i < p.size(); ++i)
    if (!(p[i] > p[i - 1])) throw std::invalid_argument("continuity path must be increasing");
  if (!(newton_tol > 0.0)) throw std::invalid_argument("newton_tol must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("damping must lie in (0, 1]");
  if (!(linear_tol > 0.0)) throw std::invalid_argument("linear_tol must be positive");
  if (newton_max_iters < 1) throw std::invalid_argument("newton_max_iters must be positive");
  if (c < 0.0) throw std::invalid_argument("c must be non-negative");
}

double normalization_constant(const ScalarField& f, double t, const HermitianMetricField& g0) {
  if (!(g0.grid().real() == f.grid())) throw std::invalid_argument("normalization_constant: grid mismatch");
  const ScalarField& det0 = g0.det();
  double vol = 0.0, integral = 0.0;
  for (std::size_t q = 0; q < f.size(); ++q) {
    vol += det0[q];
    integral += std::exp(t * f[q]) * det0[q];
  }
  return vol / integral;
}

double normalization_constant(const ScalarField& f, double t) {
  double integral = 0.0;
  for (std::size_t q = 0; q < f.size(); ++q) integral += std::exp(t * f[q]);
  return static_cast<double>(f.size()) / integral;
}

MASolution newton_solve(const ScalarField& f, double t, const KahlerPotential& u_init, const ContinuityConfig& cfg) {
  cfg.validate();
  if (!(u_init.grid.real() == f.grid())) throw std::invalid_argument("newton_solve: grid mismatch");
  const double fixed_log_a = std::log(normalization_constant(f, t, u_init.g0));
  const bool gauge = cfg.c == 0.0;
  KahlerPotential u(u_init.u, u_init.g0, gauge);
  Evaluation cur = evaluate(u, f, t, cfg, fixed_log_a);
  std::vector<double> history{cur.sup};
  const RealArray ones(f.size(), 1.0);
  const NullSpaceProjector proj(f.grid(), ones);
  int iters = 0;
  while (cur.sup >= cfg.newton_tol) {
    if (iters >= cfg.newton_max_iters)
      throw MASolveError("Newton iteration did not converge", iters, cur.sup, t, false,
                         snapshot(u, cur.log_a, cur.sup, t, iters, history));
    const DivergenceOperator k(f.grid(), adjugate_coefficients(cur.gt));
    RealArray b(f.size());
    const ScalarField& det = cur.gt.det();
    for (std::size_t q = 0; q < b.size(); ++q) b[q] = det[q] * cur.residual[q];
    if (gauge) proj.project(b.data());
    const RealArray w(det.values().begin(), det.values().end());
    const RealArray delta = solve_linear(k, w, cfg.c, b, &proj, cfg);
    double step = cfg.damping;
    bool admissibility = false;
    for (;;) {
      ScalarField trial = u.u;
      simd::kernels().axpy(step, delta.data(), trial.data(), trial.size());
      KahlerPotential next(std::move(trial), u.g0, gauge);
      try {
        Evaluation e = evaluate(next, f, t, cfg, fixed_log_a);
        if (e.sup <= cur.sup) {
          u = std::move(next);
          cur = std::move(e);
          break;
        }
        admissibility = false;
      } catch (const AdmissibilityError&) {
        admissibility = true;
      }
      step *= 0.5;
      if (step < 1.0 / 64.0)
        throw MASolveError(admissibility ? "Newton step lost admissibility at every damping level"
                                         : "Newton residual failed to decrease at every damping level",
                           iters, cur.sup, t, admissibility, snapshot(u, cur.log_a, cur.sup, t, iters, history));
    }
    ++iters;
    history.push_back(cur.sup);
  }
  MASolution sol{u, std::exp(cur.log_a), cur.sup, t, iters, {iters}, {t}, history};
  return sol;
}

MASolution newton_solve(const ScalarField& f, double t, const ComplexTorusGrid& grid, const ContinuityConfig& cfg) {
  return newton_solve(f, t, KahlerPotential(grid, ScalarField(grid.real())), cfg);
}

MASolution continuity_solve(const ScalarField& f, const ComplexTorusGrid& grid, const ContinuityConfig& cfg) {
  cfg.validate();
  KahlerPotential u(grid, ScalarField(grid.real()));
  std::vector<int> per_t;
  std::vector<double> ts;
  int total = 0;
  for (double t : cfg.path()) {
    MASolution s = [&] {
      try {
        return newton_solve(f, t, u, cfg);
      } catch (const MASolveError& e) {
        std::ostringstream msg;
        msg << "continuity path failed at t = " << t << ": " << e.what();
        throw MASolveError(msg.str(), e.iterations(), e.residual(), t, e.admissibility_lost(),
                           e.last_good() ? std::make_shared<MASolution>(*e.last_good()) : nullptr);
      }
    }();
    u = s.u;
    per_t.push_back(s.iterations);
    ts.push_back(t);
    total += s.iterations;
    if (t == 1.0) {
      s.iterations_per_t = per_t;
      s.t_values = ts;
      s.iterations = total;
      return s;
    }
  }
  throw std::logic_error("continuity path does not reach t = 1");
}

APrioriReport a_priori_report(const MASolution& sol, const ScalarField& f, double c) {
  const KahlerPotential& p = sol.u;
  const HermitianMetricField gt = potential_to_metric(p, sol.t);
  APrioriReport r;
  const ScalarField trace = p.g0.trace_of(gt.field());
  r.trace_min = trace.inf();
  r.trace_max = trace.sup();
  r.oscillation = p.u.oscillation();
  const int n = p.grid.n();
  if (p.g0.field().sup_distance(HermitianField::identity(p.grid)) == 0.0) {
    ScalarField lo, hi;
    gt.eigenvalue_bounds(lo, hi);
    r.eigenvalue_min = lo.inf();
    r.eigenvalue_max = hi.sup();
  } else {
    Eigen::MatrixXcd a(n, n), b(n, n);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> es;
    r.eigenvalue_min = INFINITY;
    r.eigenvalue_max = -INFINITY;
    for (std::size_t q = 0; q < f.size(); ++q) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          a(i, j) = gt.at(q, i, j);
          b(i, j) = p.g0.at(q, i, j);
        }
      es.compute(a, b, Eigen::EigenvaluesOnly);
      r.eigenvalue_min = std::min(r.eigenvalue_min, es.eigenvalues()(0));
      r.eigenvalue_max = std::max(r.eigenvalue_max, es.eigenvalues()(n - 1));
    }
  }
  const double log_a = std::log(sol.A);
  for (std::size_t q = 0; q < f.size(); ++q) {
    const double res = std::log(gt.det()[q] / p.g0.det()[q]) - c * p.u[q] - sol.t * f[q] - log_a;
    r.residual = std::max(r.residual, std::abs(res));
  }
  if (!(r.trace_min > 0.0))
    throw AdmissibilityError(trace.argmin(), r.trace_min, sol.t, "n + Laplacian of u is not positive");
  return r;
}

std::string format_report(const MASolution& sol, const APrioriReport& r) {
  std::ostringstream o;
  o << std::setprecision(17);
  o << "t = " << sol.t << "\n";
  o << "A = " << sol.A << "\n";
  o << "residual = " << sol.residual << "\n";
  o << "newton_iterations = " << sol.iterations << "\n";
  o << "iterations_per_t =";
  for (std::size_t i = 0; i < sol.iterations_per_t.size(); ++i)
    o << (i ? ", " : " ") << (i < sol.t_values.size() ? sol.t_values[i] : 0.0) << ":" << sol.iterations_per_t[i];
  o << "\n";
  o << "[a_priori]\n";
  o << "trace_min = " << r.trace_min << "\n";
  o << "trace_max = " << r.trace_max << "\n";
  o << "oscillation_u = " << r.oscillation << "\n";
  o << "eigenvalue_min = " << r.eigenvalue_min << "\n";
  o << "eigenvalue_max = " << r.eigenvalue_max << "\n";
  o << "recomputed_residual = " << r.residual << "\n";
  return o.str();
}

}  // namespace calabi
