#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "calabiflow/divergence_operator.hpp"
#include "calabiflow/krf.hpp"
#include "calabiflow/lambda1.hpp"
#include "calabiflow/simd/kernels.hpp"

namespace calabi {
namespace {

// d_{axis} applied on top of every term of `op`.
DiffOp extend(const DiffOp& op, int axis, double scale) {
  DiffOp out;
  for (DerivativeTerm t : op.terms()) {
    t.order[axis] += 1;
    t.coefficient *= scale;
    out.add(t);
  }
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ScalarField third_order_quantity(const KahlerPotential& p, const HermitianMetricField& gt) {
  const ComplexTorusGrid& grid = p.grid;
  const int n = grid.n();
  const auto engine = SpectralEngine::for_grid(grid.real());
  const Spectrum uh = engine->forward(p.u);
  const std::size_t np = grid.size();
  // T_{ijk} = d_{z_k} d_{z_i} d_{zbar_j} u, split into re/im arrays.
  std::vector<RealArray> tre(static_cast<std::size_t>(n * n * n), RealArray(np)),
      tim(static_cast<std::size_t>(n * n * n), RealArray(np));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int xi = ComplexTorusGrid::x_axis(i), yi = ComplexTorusGrid::y_axis(i);
      const int xj = ComplexTorusGrid::x_axis(j), yj = ComplexTorusGrid::y_axis(j);
      const DiffOp hre = (DiffOp::mixed(xi, xj) + DiffOp::mixed(yi, yj)) * 0.25;
      const DiffOp him = (DiffOp::mixed(xi, yj) - DiffOp::mixed(yi, xj)) * 0.25;
      for (int k = 0; k < n; ++k) {
        const int xk = ComplexTorusGrid::x_axis(k), yk = ComplexTorusGrid::y_axis(k);
        // (1/2)(d_xk - i d_yk)(Re H + i Im H)
        const DiffOp re_op = extend(hre, xk, 0.5) + extend(him, yk, 0.5);
        const DiffOp im_op = extend(him, xk, 0.5) - extend(hre, yk, 0.5);
        const int c = (i * n + j) * n + k;
        engine->apply(uh, engine->symbol(re_op), tre[c].data());
        engine->apply(uh, engine->symbol(im_op), tim[c].data());
      }
    }
  const HermitianField inv = gt.inverse();
  ScalarField s(grid.real());
  constexpr int M = kMaxComplexDim;
  const int n3 = n * n * n;
  for (std::size_t q = 0; q < np; ++q) {
    cplx t[M * M * M], a[M * M * M], b[M * M * M], gi[M * M];
    for (int c = 0; c < n3; ++c) t[c] = {tre[c][q], tim[c][q]};
    inv.matrix(q, gi);
    // Raise one index at a time: W_{rst} = g^{r i} g^{j s} g^{t k} T_{ijk}.
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          cplx v = 0.0;
          for (int i = 0; i < n; ++i) v += gi[r * n + i] * t[(i * n + j) * n + k];
          a[(r * n + j) * n + k] = v;
        }
    for (int r = 0; r < n; ++r)
      for (int ss = 0; ss < n; ++ss)
        for (int k = 0; k < n; ++k) {
          cplx v = 0.0;
          for (int j = 0; j < n; ++j) v += gi[j * n + ss] * a[(r * n + j) * n + k];
          b[(r * n + ss) * n + k] = v;
        }
    double acc = 0.0;
    for (int r = 0; r < n; ++r)
      for (int ss = 0; ss < n; ++ss)
        for (int tt = 0; tt < n; ++tt) {
          cplx v = 0.0;
          for (int k = 0; k < n; ++k) v += gi[tt * n + k] * b[(r * n + ss) * n + k];
          acc += (v * std::conj(t[(r * n + ss) * n + tt])).real();
        }
    s[q] = acc;
  }
  return s;
}

ScalarField yau2_margin_field(const KahlerPotential& p, double c) {
  const int n = p.grid.n();
  if (n < 2) throw std::domain_error("yau2_margin: the exponent n/(n-1) needs n >= 2");
  const HermitianMetricField gt = potential_to_metric(p);
  const ScalarField q = p.g0.trace_of(gt.field());  // n + Delta u
  ScalarField h = gt.log_det();
  h -= p.g0.log_det();
  const ScalarField lap_h = p.g0.trace_of(complex_hessian(p.grid, h));
  const double f0 = h.sup();
  const double f1 = (-1.0 * lap_h).sup();
  ScalarField w = q;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::log(q[i]) - c * p.u[i];
  const ScalarField lap_w = kahler_laplacian(gt, w);
  const double big_c = std::exp(-f0 / (n - 1));
  const double expo = static_cast<double>(n) / (n - 1);
  ScalarField m(p.grid.real());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double lhs = -q[i] * lap_w[i];
    const double rhs = f1 + c * n * q[i] - big_c * std::pow(q[i], expo);
    m[i] = rhs - lhs;
  }
  return m;
}

double yau2_margin(const KahlerPotential& p, double c) { return yau2_margin_field(p, c).inf(); }

MonitorRow MonitorContext::update(const FlowState& s, const ScalarField& f, bool force_lambda) {
  MonitorRow r;
  r.t = s.t;
  r.step = s.steps;
  const ScalarField& F = s.F;
  r.sup_f = F.sup();
  r.inf_f = F.inf();
  r.sup_abs_f = F.max_abs();
  r.osc_f = r.sup_f - r.inf_f;

  const auto& ker = simd::kernels();
  const ScalarField& det = s.gt.det();
  const double cell = f.grid().cell_volume();
  const double wsum = ker.sum(det.data(), det.size());
  r.volume = wsum * cell;
  r.mean_f = ker.dot(det.data(), F.data(), F.size()) / wsum;
  ScalarField phi = F;
  phi += -r.mean_f;
  r.energy = 0.5 * ker.weighted_dot(det.data(), phi.data(), phi.data(), phi.size()) * cell;
  r.sup_phi = phi.sup();

  const ScalarField trace = s.u.g0.trace_of(s.gt.field());
  r.min_trace = trace.inf();
  r.max_trace = trace.sup();
  ScalarField lo, hi;
  s.gt.eigenvalue_bounds(lo, hi);
  r.min_eig = lo.inf();
  r.max_eig = hi.sup();

  if (opts_.lambda1) {
    const bool due = last_lambda_step_ < 0 || s.steps - last_lambda_step_ >= opts_.lambda_every;
    if (due || force_lambda) {
      const DirichletForm form = DirichletForm::from_metric(real_metric(s.gt));
      Lambda1Options lo_opts;
      lo_opts.tol = opts_.lambda_tol;
      if (!block_.empty()) lo_opts.initial_block = &block_;
      Lambda1Result res = lambda1_solve(form, lo_opts);
      block_ = std::move(res.block);
      last_lambda_ = res.value;
      last_lambda_step_ = s.steps;
      r.lambda_fresh = true;
      // The inequality lives on the complement of the discrete kernel; round-off
      // leaves parity-mode traces in phi that carry mass but no gradient.
      RealArray psi(phi.values().begin(), phi.values().end());
      NullSpaceProjector(f.grid(), form.mass).project(psi.data());
      r.poincare_gradient = form.energy(psi.data());
      r.poincare_bound = res.value * form.mass_norm(psi.data());
    }
    r.lambda1 = last_lambda_;
  }
  if (opts_.third_order) r.s_sup = third_order_quantity(s.u, s.gt).sup();
  if (opts_.yau2) {
    r.yau2_margin = s.grid().n() >= 2 ? yau2_margin(s.u, opts_.yau_c) : std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& v, double t_start) {
  if (t.size() != v.size()) throw std::invalid_argument("decay_fit: series lengths differ");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_start) continue;
    if (!(v[i] > 0.0)) throw std::invalid_argument("decay_fit: series must be positive");
    if (v[i] <= 1e-13) continue;  // numerical floor
    x.push_back(t[i]);
    y.push_back(std::log(v[i]));
  }
  const std::size_t m = x.size();
  if (m < 10) throw std::invalid_argument("decay_fit: fewer than 10 samples above the floor after the transient");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("decay_fit: all samples share one time");
  const double slope = sxy / sxx;
  DecayFit fit;
  fit.rate = -slope;
  fit.prefactor = std::exp(my - slope * mx);
  double sse = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = y[i] - (my + slope * (x[i] - mx));
    sse += e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  fit.samples = static_cast<int>(m);
  return fit;
}

double limit_ricci_check(const KahlerPotential& u_inf, const ScalarField& f) {
  const HermitianMetricField gt = potential_to_metric(u_inf);
  HermitianField d = ricci(gt) - ricci(u_inf.g0);
  d -= complex_hessian(u_inf.grid, f);
  return d.max_abs();
}

std::string monitor_csv_header() {
  return "t,sup_absF,meanF,osc_F,E,lambda1,min_trace,max_trace,min_eig,max_eig,S_sup,yau2_margin";
}

std::string monitor_csv_row(const MonitorRow& r) {
  std::string s;
  for (double v : {r.t, r.sup_abs_f, r.mean_f, r.osc_f, r.energy, r.lambda1, r.min_trace, r.max_trace, r.min_eig,
                   r.max_eig, r.s_sup, r.yau2_margin}) {
    if (!s.empty()) s += ',';
    s += num(v);
  }
  return s;
}

std::string format_flow_report(const FlowResult& r, const std::optional<DecayFit>& omega_fit,
                               const std::optional<DecayFit>& energy_fit) {
  std::ostringstream o;
  o << "c_bar = " << num(r.c_bar) << "\n";
  o << "limit_residual = " << num(r.limit_residual) << "\n";
  o << "steps = " << r.state.steps << "\n";
  o << "final_time = " << num(r.state.t) << "\n";
  o << "drift = " << num(r.state.drift) << "\n";
  o << "final_dt = " << num(r.state.dt) << "\n";
  auto fit = [&](const char* name, const std::optional<DecayFit>& f) {
    if (!f) {
      o << name << " = unavailable\n";
      return;
    }
    o << name << "_rate = " << num(f->rate) << "\n";
    o << name << "_prefactor = " << num(f->prefactor) << "\n";
    o << name << "_r2 = " << num(f->r2) << "\n";
    o << name << "_samples = " << f->samples << "\n";
  };
  fit("omega_fit", omega_fit);
  fit("energy_fit", energy_fit);
  return o.str();
}

}  // namespace calabi
