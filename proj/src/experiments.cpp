#include "calabiflow/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "calabiflow/errors.hpp"
#include "calabiflow/fubini_study.hpp"
#include "calabiflow/grid_io.hpp"
#include "calabiflow/krf.hpp"
#include "calabiflow/ma_elliptic.hpp"
#include "calabiflow/ode.hpp"
#include "calabiflow/random_fields.hpp"
#include "calabiflow/ricci_flow.hpp"
#include "calabiflow/spectral.hpp"

namespace calabi {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// Typed access to one JSON object; every key read is remembered so that
// leftovers can be reported as unknown fields.
class Params {
 public:
  Params(json j, std::string where) : j_(std::move(j)), where_(std::move(where)) {
    if (j_.is_null()) j_ = json::object();
    if (!j_.is_object()) throw std::invalid_argument(label() + " must be a JSON object");
  }

  template <class T>
  T get(const std::string& key, T def) {
    seen_.insert(key);
    if (!j_.contains(key)) return def;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument(field(key) + " has the wrong type");
    }
  }

  double positive(const std::string& key, double def) {
    const double v = get<double>(key, def);
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(field(key) + " must be positive");
    return v;
  }
  double nonneg(const std::string& key, double def) {
    const double v = get<double>(key, def);
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(field(key) + " must be non-negative");
    return v;
  }
  long integer(const std::string& key, long def, long lo, long hi) {
    const long v = get<long>(key, def);
    if (v < lo || v > hi)
      throw std::invalid_argument(field(key) + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  }
  bool has(const std::string& key) const { return j_.contains(key); }
  json raw(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? j_.at(key) : json();
  }
  Params child(const std::string& key) { return Params(raw(key), field(key)); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw std::invalid_argument("unknown config field " + field(it.key()));
  }
  std::string field(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

 private:
  std::string label() const { return where_.empty() ? "config" : where_; }
  json j_;
  std::string where_;
  std::set<std::string> seen_;
};

struct Run {
  Run(fs::path o, std::uint64_t s, std::ostream* l) : out(std::move(o)), seed(s), log(l) {}
  fs::path out;
  std::uint64_t seed;
  std::ostream* log;
  ExperimentOutcome outcome;
  std::ostringstream report;

  void check(const std::string& name, bool ok, const std::string& detail) {
    outcome.checks.push_back({name, ok, detail});
    if (log) *log << (ok ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
  }
  void note(const std::string& msg) {
    if (log) *log << msg << "\n";
  }
  fs::path artifact(const std::string& name) {
    fs::create_directories(out);
    const fs::path p = out / name;
    outcome.artifacts.push_back(p);
    return p;
  }
  void write_text(const std::string& name, const std::string& text) {
    std::ofstream o(artifact(name), std::ios::binary);
    if (!o) throw std::runtime_error("cannot write " + (out / name).string());
    o << text;
  }
};

// ---- exact ------------------------------------------------------------------

void run_exact(Params& p, Run& r) {
  const double lambda = p.positive("lambda", 1.0);
  const double t_query = p.nonneg("t", 0.25);
  const double r0 = p.positive("r0", 1.0);
  const int n = static_cast<int>(p.integer("n", 2, 2, 64));
  const double t_max = p.positive("t_max", 0.45);
  const int steps = static_cast<int>(p.integer("steps", 450, 1, 100000000));
  const double rk4_tol = p.positive("rk4_tol", 1e-10);
  const double bracket_dt = p.positive("bracket_dt", 1e-3);
  const double bracket_tol = p.positive("bracket_tol", 1e-6);
  p.finish();

  const double rho2 = realflow::einstein_homothety(lambda, t_query, true);
  const double T = realflow::einstein_extinction_time(lambda);
  const double Ts = realflow::sphere_extinction_time(r0, n);
  if (!(t_max < std::min(T, Ts))) throw std::invalid_argument("t_max must lie before both extinction times");

  // RK4 on the scale ODEs against the closed forms.
  auto einstein_rhs = [lambda](double, double) { return -2.0 * lambda; };
  auto sphere_rhs = [n](double, double) { return -2.0 * (n - 1); };
  std::ostringstream csv;
  csv << "t,rho2_closed,rho2_rk4,r2_closed,r2_rk4\n";
  const double dt = t_max / steps;
  double y_e = 1.0, y_s = r0 * r0, worst_e = 0.0, worst_s = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double t = i * dt;
    const double ce = realflow::einstein_homothety(lambda, t, true);
    const double rs = realflow::sphere_radius(r0, n, t);
    const double cs = rs * rs;
    worst_e = std::max(worst_e, std::abs(y_e - ce) / std::abs(ce));
    worst_s = std::max(worst_s, std::abs(y_s - cs) / std::abs(cs));
    csv << num(t) << ',' << num(ce) << ',' << num(y_e) << ',' << num(cs) << ',' << num(y_s) << '\n';
    y_e = rk4_step(einstein_rhs, t, y_e, dt);
    y_s = rk4_step(sphere_rhs, t, y_s, dt);
  }
  const auto be = realflow::bracket_extinction(einstein_rhs, 1.0, bracket_dt, 0.5 * bracket_tol, 4.0 * T);
  const auto bs = realflow::bracket_extinction(sphere_rhs, r0 * r0, bracket_dt, 0.5 * bracket_tol, 4.0 * Ts);

  char head[64];
  std::snprintf(head, sizeof head, "rho2(%g) = ", t_query);
  r.report << head << num(rho2) << "\n";
  r.report << "T = " << num(T) << "\n";
  r.report << "sphere_extinction_time = " << num(Ts) << "\n";
  r.report << "einstein_bracket = [" << num(be.lower) << ", " << num(be.upper) << "]\n";
  r.report << "sphere_bracket = [" << num(bs.lower) << ", " << num(bs.upper) << "]\n";
  r.report << "rk4_rel_error_einstein = " << num(worst_e) << "\n";
  r.report << "rk4_rel_error_sphere = " << num(worst_s) << "\n";
  r.write_text("exact.csv", csv.str());

  r.check("rk4_einstein_scale", worst_e <= rk4_tol, "max rel error " + sci(worst_e));
  r.check("rk4_sphere_radius", worst_s <= rk4_tol, "max rel error " + sci(worst_s));
  auto bracket_ok = [&](const realflow::ExtinctionBracket& b, double truth) {
    return b.lower <= truth && truth <= b.upper && b.upper - b.lower <= bracket_tol;
  };
  r.check("einstein_extinction_bracket", bracket_ok(be, T),
          "[" + num(be.lower) + ", " + num(be.upper) + "] vs " + num(T));
  r.check("sphere_extinction_bracket", bracket_ok(bs, Ts),
          "[" + num(bs.lower) + ", " + num(bs.upper) + "] vs " + num(Ts));
}

// ---- variation-check ----------------------------------------------------------

void run_variation(Params& p, Run& r) {
  const int res = static_cast<int>(p.integer("resolution", 32, 4, 512));
  const int dims = static_cast<int>(p.integer("dims", 3, 2, 3));
  const int max_mode = static_cast<int>(p.integer("max_mode", 1, 1, 8));
  const double amp = p.positive("amplitude", 0.3);
  const double ds = p.positive("ds", 1e-4);
  const double tol = p.positive("tol", 1e-6);
  p.finish();
  if (amp >= 0.5) throw std::invalid_argument("amplitude must be below 0.5 (positive definiteness)");

  PeriodicGrid grid(std::vector<int>(dims, res));
  const MetricField g = random_metric(grid, r.seed, max_mode, amp);
  const TensorField h = random_symmetric(grid, r.seed + 1, max_mode, amp);
  const auto input = realflow::VariationInput::make(g, h);
  std::ostringstream csv;
  csv << "formula,discrepancy\n";
  for (auto f : realflow::all_variation_formulas()) {
    const double d = realflow::variation_check(input, f, ds);
    csv << realflow::to_string(f) << ',' << num(d) << '\n';
    r.report << realflow::to_string(f) << " = " << num(d) << "\n";
    r.check("variation_" + realflow::to_string(f), d <= tol, "discrepancy " + sci(d));
  }
  r.write_text("variation.csv", csv.str());
}

// ---- surface-flow -------------------------------------------------------------

void run_surface(Params& p, Run& r) {
  const int res = static_cast<int>(p.integer("resolution", 64, 8, 4096));
  const double amp = p.get<double>("amplitude", 0.2);
  const int mode = static_cast<int>(p.integer("mode", 1, 0, 64));
  realflow::SurfaceFlowOptions o;
  o.normalized = p.get<bool>("normalized", true);
  const std::string scheme = p.get<std::string>("scheme", "explicit-rk4");
  if (scheme == "imex")
    o.scheme = realflow::SurfaceScheme::imex;
  else if (scheme == "explicit-rk4")
    o.scheme = realflow::SurfaceScheme::explicit_rk4;
  else
    throw std::invalid_argument("scheme must be imex or explicit-rk4");
  o.dt = p.nonneg("dt", 0.0);
  o.steps = static_cast<int>(p.integer("steps", 200000, 1, 100000000));
  o.record_every = static_cast<int>(p.integer("record_every", 10, 1, 100000000));
  o.keep_trajectory = false;
  o.blowup_bound = p.positive("blowup_bound", 10.0);
  o.stop_sup_r = p.nonneg("stop_sup_r", 1e-7);
  const double vol_tol = p.positive("volume_tol", 1e-8);
  const double r_tol = p.positive("sup_r_tol", 1e-6);
  const double osc_tol = p.positive("osc_tol", 1e-6);
  p.finish();

  PeriodicGrid grid({res, res});
  const ScalarField w0 =
      ScalarField::from_function(grid, [&](auto x) { return amp * std::cos(2.0 * M_PI * mode * x[0]); });
  const auto result = realflow::conformal_surface_flow(w0, o);
  std::ostringstream csv;
  csv << realflow::surface_csv_header() << "\n";
  for (const auto& m : result.monitors) csv << realflow::surface_csv_row(m) << "\n";
  r.write_text("surface.csv", csv.str());
  write_scalar(r.artifact("w_final.bin"), result.final_w);

  const auto& first = result.monitors.front();
  const auto& last = result.monitors.back();
  double dvol = 0.0;
  for (const auto& m : result.monitors) dvol = std::max(dvol, std::abs(m.volume - first.volume));
  r.report << "steps = " << result.steps_taken << "\n";
  r.report << "dt = " << num(result.dt) << "\n";
  r.report << "final_time = " << num(last.t) << "\n";
  r.report << "final_sup_R = " << num(last.sup_r) << "\n";
  r.report << "final_osc_w = " << num(last.osc_w) << "\n";
  r.report << "volume_drift = " << num(dvol) << "\n";
  r.check("volume_constant", dvol <= vol_tol, "max drift " + sci(dvol));
  r.check("final_sup_R", last.sup_r < r_tol, "sup|R| " + sci(last.sup_r));
  r.check("final_osc_w", last.osc_w < osc_tol, "osc(w) " + sci(last.osc_w));
}

// ---- fs-check -------------------------------------------------------------------

void run_fs(Params& p, Run& r) {
  const json dims_j = p.raw("dims");
  std::vector<int> dims = {1, 2, 3};
  if (!dims_j.is_null()) {
    if (!dims_j.is_array() || dims_j.empty()) throw std::invalid_argument("dims must be a non-empty array");
    dims.clear();
    for (const auto& d : dims_j) {
      if (!d.is_number_integer() || d.get<int>() < 1 || d.get<int>() > 6)
        throw std::invalid_argument("dims entries must be integers in [1, 6]");
      dims.push_back(d.get<int>());
    }
  }
  const int points = static_cast<int>(p.integer("points", 100, 1, 100000));
  const double radius = p.positive("radius", 1.0);
  const double h = p.positive("h", 1e-2);
  const double tol = p.positive("tol", 1e-8);
  p.finish();

  SeededUniform rng(r.seed);
  std::ostringstream csv;
  csv << "n,point,ric_error\n";
  for (int n : dims) {
    double worst = 0.0;
    for (int k = 0; k < points; ++k) {
      std::vector<std::complex<double>> z(n);
      for (auto& c : z) c = {radius * rng.next(), radius * rng.next()};
      const FubiniStudyPoint fsp = fubini_study(z, h);
      const double err = (fsp.ric - (n + 1.0) * fsp.g).cwiseAbs().maxCoeff();
      worst = std::max(worst, err);
      csv << n << ',' << k << ',' << num(err) << '\n';
    }
    r.report << "ric_error_n" << n << " = " << num(worst) << "\n";
    r.check("fs_ricci_einstein_n" + std::to_string(n), worst <= tol, "max |Ric - (n+1) g| " + sci(worst));
    const auto curv = fubini_study_origin_curvature(n, h);
    double cerr = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            const double want = (i == j && a == b ? 1.0 : 0.0) + (i == b && a == j ? 1.0 : 0.0);
            cerr = std::max(cerr, std::abs(curv[((i * n + j) * n + a) * n + b] - want));
          }
    r.report << "origin_curvature_error_n" << n << " = " << num(cerr) << "\n";
    if (n >= 2)
      r.report << "R_1111_n" << n << " = " << num(curv[0].real()) << "\nR_1122_n" << n << " = "
               << num(curv[((0 * n + 0) * n + 1) * n + 1].real()) << "\n";
    r.check("fs_origin_curvature_n" + std::to_string(n), cerr <= tol, "max error " + sci(cerr));
  }
  r.write_text("fs.csv", csv.str());
}

// ---- shared pieces for the complex experiments ------------------------------------

ComplexTorusGrid read_grid(Params& p, int def_n, int def_res) {
  Params g = p.child("grid");
  const int n = static_cast<int>(g.integer("n", def_n, 1, 3));
  const int res = static_cast<int>(g.integer("resolution", def_res, 4, 1024));
  g.finish();
  if (res % 2) throw std::invalid_argument(g.field("resolution") + " must be even");
  return ComplexTorusGrid(n, res);
}

// n = 1 Poisson reduction: (1/4) Delta u = A e^f - 1.
ScalarField poisson_solution(const ScalarField& f, double a) {
  const auto engine = SpectralEngine::for_grid(f.grid());
  ScalarField rhs = f;
  for (double& v : rhs.values()) v = a * std::exp(v) - 1.0;
  Spectrum s = engine->forward(rhs);
  const Symbol quarter = engine->build_symbol([](std::span<const double> k) { return -0.25 * (k[0] * k[0] + k[1] * k[1]); });
  for (std::size_t m = 0; m < s.size(); ++m) s[m] = engine->is_null_mode(m) ? 0.0 : s[m] / quarter.re[m];
  return engine->inverse(s);
}

ContinuityConfig read_continuity(Params& p) {
  ContinuityConfig c;
  const json steps = p.raw("t_steps");
  if (steps.is_number_integer()) {
    const int k = steps.get<int>();
    if (k < 1) throw std::invalid_argument("t_steps must be positive");
    for (int i = 0; i <= k; ++i) c.t_steps.push_back(static_cast<double>(i) / k);
  } else if (steps.is_array()) {
    for (const auto& v : steps) {
      if (!v.is_number()) throw std::invalid_argument("t_steps entries must be numbers");
      c.t_steps.push_back(v.get<double>());
    }
  } else if (!steps.is_null()) {
    throw std::invalid_argument("t_steps must be an integer count or an array of times");
  }
  c.newton_tol = p.positive("newton_tol", c.newton_tol);
  c.newton_max_iters = static_cast<int>(p.integer("newton_max_iters", c.newton_max_iters, 1, 100000));
  c.damping = p.positive("damping", c.damping);
  c.linear_tol = p.positive("linear_tol", c.linear_tol);
  c.linear_max_iters = static_cast<int>(p.integer("linear_max_iters", c.linear_max_iters, 1, 10000000));
  c.c = p.nonneg("c", c.c);
  c.validate();
  return c;
}

void write_u(Run& r, const std::string& name, const KahlerPotential& u) { write_scalar(r.artifact(name), u.u); }

// ---- ma-solve ---------------------------------------------------------------------

void run_ma(Params& p, Run& r) {
  const ComplexTorusGrid grid = read_grid(p, 1, 64);
  const ScalarField f = make_source(grid, p.raw("f").is_null() ? json{{"preset", "product-cosine"}} : p.raw("f"), r.seed);
  const ContinuityConfig cfg = read_continuity(p);
  const double poisson_tol = p.positive("poisson_tol", 1e-6);
  const bool uniqueness = p.get<bool>("uniqueness_check", true);
  const double uniq_tol = p.positive("uniqueness_tol", 1e-8);
  p.finish();

  std::optional<MASolution> solved;
  try {
    solved = continuity_solve(f, grid, cfg);
  } catch (const MASolveError& e) {
    r.report << "error = " << e.what() << "\nfailed_t = " << num(e.t()) << "\n";
    if (e.last_good()) write_u(r, "u_last_good.bin", e.last_good()->u);
    r.check("continuity_reaches_t1", false, std::string(e.what()) + " at t = " + num(e.t()));
    return;
  }
  const MASolution& sol = *solved;
  const APrioriReport rep = a_priori_report(sol, f, cfg.c);
  r.report << format_report(sol, rep);
  write_u(r, "u.bin", sol.u);
  std::ostringstream hist;
  hist << "t,iterations\n";
  for (std::size_t i = 0; i < sol.t_values.size(); ++i)
    hist << num(sol.t_values[i]) << ',' << sol.iterations_per_t[i] << '\n';
  r.write_text("continuity.csv", hist.str());

  r.check("continuity_reaches_t1", sol.t == 1.0, "t = " + num(sol.t));
  r.check("newton_residual", sol.residual <= cfg.newton_tol, "residual " + sci(sol.residual));
  r.check("admissible_trace", rep.trace_min > 0.0, "min n + Delta u = " + num(rep.trace_min));
  r.check("admissible_eigenvalue", rep.eigenvalue_min > 0.0, "min eigenvalue " + num(rep.eigenvalue_min));
  if (grid.n() == 1 && cfg.c == 0.0) {
    const double d = sup_distance(sol.u.u, poisson_solution(f, sol.A));
    r.report << "poisson_distance = " << num(d) << "\n";
    r.check("poisson_oracle", d <= poisson_tol, "sup distance " + sci(d));
  }
  if (uniqueness && cfg.c == 0.0) {
    // Second start: a small admissible trigonometric perturbation, then Newton at t = 1.
    const ScalarField v0 = random_trig_field(grid.real(), r.seed + 17, 1, 0.02);
    const MASolution other = newton_solve(f, 1.0, KahlerPotential(v0, HermitianMetricField::identity(grid)), cfg);
    const double d = sup_distance(other.u.u, sol.u.u);
    r.report << "uniqueness_distance = " << num(d) << "\n";
    r.check("uniqueness", d <= uniq_tol, "sup distance " + sci(d));
  }
}

// ---- krf ----------------------------------------------------------------------------

void run_krf(Params& p, Run& r) {
  const ComplexTorusGrid grid = read_grid(p, 1, 32);
  const json fspec = p.raw("f");
  const ScalarField f = make_source(grid, fspec.is_null() ? json{{"preset", "product-cosine"}} : fspec, r.seed);
  FlowConfig cfg;
  cfg.scheme = parse_flow_scheme(p.get<std::string>("scheme", "imex"));
  cfg.dt = p.nonneg("dt", 0.0);
  cfg.imex_factor = p.positive("imex_factor", cfg.imex_factor);
  cfg.stop_tol = p.positive("stop_tol", cfg.stop_tol);
  cfg.residual_tol = p.positive("residual_tol", cfg.residual_tol);
  cfg.max_steps = p.integer("max_steps", cfg.max_steps, 0, 1000000000);
  cfg.record_every = static_cast<int>(p.integer("record_every", 1, 1, 1000000000));
  cfg.checkpoint_every = static_cast<int>(p.integer("checkpoint_every", 0, 0, 1000000000));
  if (cfg.checkpoint_every > 0) cfg.checkpoint_dir = r.out / "checkpoints";
  {
    Params m = p.child("monitors");
    cfg.monitors.lambda1 = m.get<bool>("lambda1", true);
    cfg.monitors.lambda_every = static_cast<int>(m.integer("lambda_every", 10, 1, 1000000000));
    cfg.monitors.lambda_tol = m.positive("lambda_tol", 1e-10);
    cfg.monitors.third_order = m.get<bool>("third_order", true);
    cfg.monitors.yau2 = m.get<bool>("yau2", true);
    cfg.monitors.yau_c = m.positive("yau_c", 2.0);
    m.finish();
  }
  const double fit_start = p.nonneg("fit_start", 0.1);
  const double ricci_tol = p.positive("ricci_tol", 1e-5);
  const bool compare = p.get<bool>("compare_elliptic", true);
  const double match_tol = p.positive("match_tol", grid.n() == 1 ? 1e-6 : 1e-5);
  const double cbar_tol = p.positive("cbar_tol", 1e-8);
  const double cont_tol = p.positive("continuity_tol", 1e-8);
  p.finish();
  cfg.validate();

  FlowResult res = [&] {
    try {
      return run_flow(f, grid, cfg);
    } catch (const AdmissibilityError& e) {
      r.check("flow_admissible", false, e.what());
      throw;
    } catch (const ConvergenceError& e) {
      r.check("flow_converged", false, std::string(e.what()) + ", residual " + sci(e.residual()));
      throw;
    }
  }();

  std::ostringstream csv;
  csv << monitor_csv_header() << "\n";
  for (const auto& m : res.monitors) csv << monitor_csv_row(m) << "\n";
  r.write_text("monitors.csv", csv.str());
  write_u(r, "u_final.bin", res.state.u);

  std::vector<double> ts, om, en;
  for (const auto& m : res.monitors) {
    ts.push_back(m.t);
    om.push_back(m.osc_f);
    en.push_back(m.energy);
  }
  std::optional<DecayFit> fo, fe;
  try {
    fo = decay_fit(ts, om, fit_start);
    fe = decay_fit(ts, en, fit_start);
  } catch (const std::invalid_argument& e) {
    r.note(std::string("decay fit unavailable: ") + e.what());
  }
  r.report << format_flow_report(res, fo, fe);
  r.check("flow_limit_residual", res.limit_residual < cfg.residual_tol, "sup|F - c_bar| " + sci(res.limit_residual));
  const double ric = limit_ricci_check(res.state.u, f);
  r.report << "limit_ricci_check = " << num(ric) << "\n";
  r.check("limit_ricci", ric < ricci_tol, "residual " + sci(ric));

  if (!res.monitors.empty()) {
    const double supf = f.max_abs();
    double f_excess = -std::numeric_limits<double>::infinity(), trace_min = std::numeric_limits<double>::infinity();
    double omega_up = 0.0, dvol = 0.0, poinc = std::numeric_limits<double>::infinity(),
           yau = std::numeric_limits<double>::infinity();
    int fresh = 0;
    const double vol0 = res.monitors.front().volume;
    for (std::size_t i = 0; i < res.monitors.size(); ++i) {
      const auto& m = res.monitors[i];
      f_excess = std::max(f_excess, m.sup_abs_f - supf);
      trace_min = std::min(trace_min, m.min_trace);
      if (i) omega_up = std::max(omega_up, m.osc_f - res.monitors[i - 1].osc_f);
      dvol = std::max(dvol, std::abs(m.volume - vol0));
      if (m.lambda_fresh) {
        ++fresh;
        poinc = std::min(poinc, m.poincare_gradient - m.poincare_bound * (1.0 - 1e-8));
      }
      if (!std::isnan(m.yau2_margin)) yau = std::min(yau, m.yau2_margin);
    }
    r.check("sup_F_bound", f_excess <= 1e-10, "max(sup|F| - sup|f|) = " + sci(f_excess));
    r.check("trace_positive", trace_min > 0.0, "min n + Delta u = " + num(trace_min));
    r.check("omega_nonincreasing", omega_up <= 1e-12, "largest increase " + sci(omega_up));
    r.check("volume_constant", dvol <= 1e-8, "max drift " + sci(dvol));
    if (cfg.monitors.lambda1)
      r.check("poincare_consistency", fresh > 0 && poinc >= 0.0,
              std::to_string(fresh) + " snapshots, min margin " + sci(fresh ? poinc : 0.0));
    if (cfg.monitors.yau2 && grid.n() >= 2) r.check("yau2_margin", yau >= -1e-8, "min margin " + sci(yau));
    if (fo) r.check("omega_decay_fit", fo->rate > 0.0 && fo->r2 > 0.99, "rate " + num(fo->rate) + ", R2 " + num(fo->r2));
    if (fe) r.check("energy_decay_fit", fe->rate > 0.0 && fe->r2 > 0.99, "rate " + num(fe->rate) + ", R2 " + num(fe->r2));
  }

  if (compare) {
    // The limit solves the elliptic problem with data -f.
    const ScalarField mf = -1.0 * f;
    ContinuityConfig ccfg;
    MASolution sol = continuity_solve(mf, grid, ccfg);
    const double d = sup_distance(sol.u.u, res.state.u.u);
    const double dc = std::abs(res.c_bar - std::log(sol.A));
    r.report << "elliptic_residual = " << num(sol.residual) << "\n";
    r.report << "elliptic_distance = " << num(d) << "\n";
    r.report << "log_A = " << num(std::log(sol.A)) << "\n";
    r.check("continuity_residual", sol.t == 1.0 && sol.residual < cont_tol, "residual " + sci(sol.residual));
    r.check("flow_matches_elliptic", d < match_tol, "sup distance " + sci(d));
    r.check("c_bar_equals_log_A", dc < cbar_tol, "|c_bar - log A| " + sci(dc));
    if (grid.n() == 1) {
      const double dp = sup_distance(res.state.u.u, poisson_solution(mf, sol.A));
      r.report << "poisson_distance = " << num(dp) << "\n";
      r.check("flow_matches_poisson", dp < match_tol, "sup distance " + sci(dp));
    }
  }
}

// ---- verify-all -----------------------------------------------------------------------

ExperimentOutcome run_one(const std::string& kind, Params& p, const fs::path& out, std::uint64_t seed,
                          std::ostream* log);

void run_verify_all(Params& p, Run& r) {
  const bool quick = p.get<bool>("quick", true);
  p.finish();
  const std::vector<std::pair<std::string, json>> battery = {
      {"exact", json::object()},
      {"variation-check", json::object()},
      {"fs-check", json::object()},
      {"surface-flow", {{"resolution", quick ? 32 : 64}}},
      {"ma-solve", {{"grid", {{"n", 1}, {"resolution", quick ? 32 : 64}}}}},
      {"krf", {{"grid", {{"n", 1}, {"resolution", 32}}}, {"f", {{"preset", "product-cosine"}, {"amplitude", 0.5}}}}},
  };
  for (const auto& [kind, cfg] : battery) {
    r.note("== " + kind);
    Params sub(cfg, "");
    ExperimentOutcome o = run_one(kind, sub, r.out / kind, r.seed, r.log);
    for (auto& c : o.checks) {
      c.name = kind + "/" + c.name;
      r.outcome.checks.push_back(std::move(c));
    }
    for (auto& a : o.artifacts) r.outcome.artifacts.push_back(std::move(a));
    r.report << kind << "_failures = " << o.failures() << "\n";
  }
}

ExperimentOutcome run_one(const std::string& kind, Params& p, const fs::path& out, std::uint64_t seed,
                          std::ostream* log) {
  Run r(out, seed, log);
  r.report << "kind = " << kind << "\nseed = " << seed << "\n";
  try {
    if (kind == "exact")
      run_exact(p, r);
    else if (kind == "variation-check")
      run_variation(p, r);
    else if (kind == "surface-flow")
      run_surface(p, r);
    else if (kind == "fs-check")
      run_fs(p, r);
    else if (kind == "ma-solve")
      run_ma(p, r);
    else if (kind == "krf")
      run_krf(p, r);
    else if (kind == "verify-all")
      run_verify_all(p, r);
    else
      throw std::invalid_argument(describe(kind));  // unreachable for valid kinds
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    // Runtime failures of the experiment itself become a named failed check.
    if (r.outcome.checks.empty() || r.outcome.checks.back().passed)
      r.check("experiment_completed", false, e.what());
    r.report << "error = " << e.what() << "\n";
  }
  std::ostringstream checks;
  for (const auto& c : r.outcome.checks) checks << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  r.report << "failures = " << r.outcome.failures() << "\n";
  r.write_text("checks.txt", checks.str());
  r.write_text("report.txt", r.report.str());
  return std::move(r.outcome);
}

std::string kind_list() {
  std::string s;
  for (const auto& k : experiment_kinds()) s += (s.empty() ? "" : ", ") + k;
  return s;
}

}  // namespace

int ExperimentOutcome::failures() const {
  return static_cast<int>(std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.passed; }));
}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k = {"exact", "variation-check", "surface-flow", "fs-check",
                                             "ma-solve", "krf", "verify-all"};
  return k;
}

std::string describe(const std::string& kind) {
  if (kind == "exact")
    return "exact: closed-form Ricci flows.\n"
           "  Einstein homothety rho^2(t) = 1 - 2 lambda t with extinction T = 1 / (2 lambda);\n"
           "  round sphere r(t)^2 = r0^2 - 2 (n - 1) t, shrinking to a point at r0^2 / (2 (n - 1)).\n"
           "  RK4 on both scale ODEs is compared with the closed forms, and the extinction times are bracketed.\n"
           "config (defaults): lambda 1, t 0.25, r0 1, n 2, t_max 0.45, steps 450, rk4_tol 1e-10,\n"
           "  bracket_dt 1e-3, bracket_tol 1e-6\n"
           "outputs: report.txt (rho2(t), T, brackets), exact.csv [t,rho2_closed,rho2_rk4,r2_closed,r2_rk4], checks.txt\n";
  if (kind == "variation-check")
    return "variation-check: first variation formulas of Riemannian geometry along g + s h.\n"
           "  Analytic variations of g^{-1}, Christoffel symbols, Riemann, Ricci, scalar curvature,\n"
           "  volume element, total volume and total scalar curvature against central differences in s.\n"
           "  g and h are seeded band-limited trigonometric fields (seed, seed + 1).\n"
           "config (defaults): resolution 32, dims 3, max_mode 1, amplitude 0.3, ds 1e-4, tol 1e-6\n"
           "outputs: report.txt, variation.csv [formula,discrepancy], checks.txt\n";
  if (kind == "surface-flow")
    return "surface-flow: Ricci flow of conformal metrics e^{2w} delta on the flat 2-torus,\n"
           "  dw/dt = -R/2 (normalized variant adds r/2, with r the mean scalar curvature), R = -2 e^{-2w} Delta w.\n"
           "  Initial data w0 = amplitude cos(2 pi mode x).\n"
           "config (defaults): resolution 64, amplitude 0.2, mode 1, normalized true, scheme explicit-rk4 | imex,\n"
           "  dt 0 (stability-derived), steps 200000, record_every 10, blowup_bound 10, stop_sup_r 1e-7,\n"
           "  volume_tol 1e-8, sup_r_tol 1e-6, osc_tol 1e-6\n"
           "outputs: surface.csv [t,sup_R,inf_R,volume,sup_w,osc_w], w_final.bin, report.txt, checks.txt\n";
  if (kind == "fs-check")
    return "fs-check: Fubini-Study metric of CP^n in the affine chart, g = ddbar log(1 + |z|^2).\n"
           "  Kahler-Einstein identity Ric = (n + 1) g at seeded chart points, and constant holomorphic\n"
           "  bisectional curvature at the origin, R_{i jbar k lbar} = delta_ij delta_kl + delta_il delta_kj.\n"
           "config (defaults): dims [1, 2, 3], points 100, radius 1, h 1e-2, tol 1e-8\n"
           "outputs: fs.csv [n,point,ric_error], report.txt, checks.txt\n";
  if (kind == "ma-solve")
    return "ma-solve: complex Monge-Ampere equation on the flat complex torus by the continuity method.\n"
           "  Continuity family det(g + ddbar u_t) / det g = A(t) e^{t f}, t in [0, 1], with\n"
           "  A(t) = Vol / int e^{t f} dV fixing the volume; Newton at each t with a divergence-form\n"
           "  Jacobian and mean-zero gauge. Optional zeroth-order term c u.\n"
           "  Reports the a priori quantities: n + Delta u bounds, oscillation of u, eigenvalues of g~.\n"
           "config (defaults): grid {n 1, resolution 64}, f {preset product-cosine}, t_steps 10 (count or list),\n"
           "  newton_tol 1e-10, newton_max_iters 60, damping 1, linear_tol 1e-10, linear_max_iters 1000, c 0,\n"
           "  poisson_tol 1e-6 (n = 1 only), uniqueness_check true, uniqueness_tol 1e-8\n"
           "f presets: zero, product-cosine, two-mode, cosine-x, random {max_mode, seed}; or coefficients\n"
           "  [{k: [...], cos: a, sin: b}]; all take amplitude\n"
           "outputs: report.txt (A, residual, [a_priori] block), u.bin, continuity.csv [t,iterations], checks.txt\n";
  if (kind == "krf")
    return "krf: parabolic complex Monge-Ampere flow on the flat complex torus,\n"
           "  du/dt = log det(g_{i jbar} + u_{i jbar}) / det(g_{i jbar}) + f, u(0) = 0,\n"
           "  run until osc F < stop_tol with F = log YC(u) + f. The limit satisfies log YC(u) = c_bar - f,\n"
           "  so it is compared with the elliptic solution for data -f and c_bar with log A.\n"
           "  A priori monitors: maximum principle for F, its oscillation omega and energy E with\n"
           "  exponential decay fits, Poincare consistency with lambda1 of g~, n + Delta u, eigenvalues of g~,\n"
           "  third-order quantity S, and the margin in Yau's second order inequality (n >= 2).\n"
           "config (defaults): grid {n 1, resolution 32}, f {preset product-cosine}, scheme imex | explicit-rk4,\n"
           "  dt 0, imex_factor 50, stop_tol 1e-9, residual_tol 1e-6, max_steps 200000, record_every 1,\n"
           "  checkpoint_every 0, monitors {lambda1 true, lambda_every 10, lambda_tol 1e-10, third_order true,\n"
           "  yau2 true, yau_c 2}, fit_start 0.1, ricci_tol 1e-5, compare_elliptic true,\n"
           "  match_tol 1e-6 (n = 1) or 1e-5, cbar_tol 1e-8, continuity_tol 1e-8\n"
           "monitor columns: " +
           monitor_csv_header() +
           "\noutputs: monitors.csv, report.txt, u_final.bin, checkpoints/u_NNNNNNN.bin, checks.txt\n";
  if (kind == "verify-all")
    return "verify-all: the invariant battery (exact, variation-check, fs-check, surface-flow, ma-solve, krf)\n"
           "  on small grids with default parameters; each run writes into <out>/<kind>/.\n"
           "  Same seed gives byte-identical CSV outputs.\n"
           "config (defaults): quick true (false uses the full resolutions)\n"
           "outputs: per-kind artifacts, report.txt, checks.txt\n";
  throw std::invalid_argument("unknown experiment kind '" + kind + "'; valid kinds: " + kind_list());
}

ExperimentConfig load_config(const std::string& kind, const fs::path& path, const std::optional<fs::path>& out,
                             const std::optional<std::uint64_t>& seed) {
  describe(kind);  // validates the kind
  ExperimentConfig cfg;
  cfg.kind = kind;
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  if (j.contains("kind")) {
    if (!j["kind"].is_string() || j["kind"].get<std::string>() != kind)
      throw std::invalid_argument("config field kind does not match the command line kind");
    j.erase("kind");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw std::invalid_argument("config field seed must be a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
    j.erase("seed");
  }
  if (j.contains("out")) {
    if (!j["out"].is_string()) throw std::invalid_argument("config field out must be a string");
    cfg.out_dir = j["out"].get<std::string>();
    j.erase("out");
  }
  if (out) cfg.out_dir = *out;
  if (seed) cfg.seed = *seed;
  cfg.params = std::move(j);
  return cfg;
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  describe(cfg.kind);
  Params p(cfg.params, "");
  return run_one(cfg.kind, p, cfg.out_dir, cfg.seed, log);
}

ScalarField make_source(const ComplexTorusGrid& grid, const json& spec, std::uint64_t seed) {
  Params p(spec, "f");
  const PeriodicGrid& g = grid.real();
  const int n = grid.n();
  if (p.has("coefficients")) {
    const json list = p.raw("coefficients");
    p.finish();
    if (!list.is_array()) throw std::invalid_argument("f.coefficients must be an array");
    ScalarField f(g);
    std::vector<double> x(g.dims());
    for (std::size_t c = 0; c < list.size(); ++c) {
      Params term(list[c], "f.coefficients[" + std::to_string(c) + "]");
      const json kj = term.raw("k");
      const double a = term.get<double>("cos", 0.0), b = term.get<double>("sin", 0.0);
      term.finish();
      if (!kj.is_array() || static_cast<int>(kj.size()) != g.dims())
        throw std::invalid_argument(term.field("k") + " must list " + std::to_string(g.dims()) + " integer wavenumbers");
      std::vector<int> k;
      for (const auto& v : kj) {
        if (!v.is_number_integer()) throw std::invalid_argument(term.field("k") + " entries must be integers");
        k.push_back(v.get<int>());
      }
      for (std::size_t q = 0; q < f.size(); ++q) {
        g.coordinates(q, x);
        double ph = 0.0;
        for (int d = 0; d < g.dims(); ++d) ph += k[d] * x[d] / g.period(d);
        f[q] += a * std::cos(2.0 * M_PI * ph) + b * std::sin(2.0 * M_PI * ph);
      }
    }
    return f;
  }
  const std::string preset = p.get<std::string>("preset", "zero");
  const double amp = p.get<double>("amplitude", preset == "random" ? 0.3 : 0.5);
  if (!std::isfinite(amp)) throw std::invalid_argument("f.amplitude must be finite");
  const double tau = 2.0 * M_PI;
  const int xn = ComplexTorusGrid::x_axis(n - 1);
  ScalarField f(g);
  if (preset == "zero") {
  } else if (preset == "product-cosine") {
    // amplitude cos(2 pi x1) cos(2 pi y1)
    f = ScalarField::from_function(g, [&](auto x) { return amp * std::cos(tau * x[0]) * std::cos(tau * x[1]); });
  } else if (preset == "two-mode") {
    // amplitude (cos(2 pi x1) cos(2 pi y1) + cos(2 pi xn)) / 2
    f = ScalarField::from_function(
        g, [&](auto x) { return 0.5 * amp * (std::cos(tau * x[0]) * std::cos(tau * x[1]) + std::cos(tau * x[xn])); });
  } else if (preset == "cosine-x") {
    const int mode = static_cast<int>(p.integer("mode", 1, 0, 1 << 20));
    f = ScalarField::from_function(g, [&](auto x) { return amp * std::cos(tau * mode * x[0]); });
  } else if (preset == "random") {
    const int max_mode = static_cast<int>(p.integer("max_mode", 2, 1, 64));
    const auto s = p.get<std::uint64_t>("seed", seed);
    f = random_trig_field(g, s, max_mode, amp);
  } else {
    throw std::invalid_argument("f.preset must be one of zero, product-cosine, two-mode, cosine-x, random");
  }
  p.finish();
  return f;
}

}  // namespace calabi
