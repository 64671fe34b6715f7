#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "calabiflow/kahler.hpp"

namespace calabi {

enum class FlowScheme { explicit_rk4, imex };
FlowScheme parse_flow_scheme(const std::string& name);
std::string to_string(FlowScheme s);

// du/dt = log YC(u) + f on the flat complex torus.
ScalarField flow_rhs(const KahlerPotential& p, const ScalarField& f, double time = 0.0);

struct FlowState {
  double t = 0.0;
  KahlerPotential u;
  double drift = 0.0;  // accumulated spatial mean removed from u
  double dt = 0.0;
  long steps = 0;
  HermitianMetricField gt;  // g0 + ddbar u
  ScalarField F;            // flow_rhs at the current u

  FlowState(KahlerPotential u0, const ScalarField& f);
  const ComplexTorusGrid& grid() const noexcept { return u.grid; }
};

// 0.2 h_w^2 with h_w^2 = 1 / (4 max tr g~^{-1} (N/2)^2), capped by the RK4
// stability limit of the linearization.
double explicit_time_step(const FlowState& s);
// Stabilized IMEX step: `factor` times the explicit step.
double imex_time_step(const FlowState& s, double factor = 50.0);

// Advance by s.dt. Admissibility failure in a stage halves the step (down to
// min_dt) before reporting AdmissibilityError with time and point.
void step(FlowState& s, const ScalarField& f, FlowScheme scheme, double min_dt = 1e-12);

struct MonitorOptions {
  bool lambda1 = true;
  int lambda_every = 10;  // in steps
  double lambda_tol = 1e-10;
  bool third_order = true;
  bool yau2 = true;
  double yau_c = 2.0;
};

struct MonitorRow {
  double t = 0.0;
  long step = 0;
  double sup_abs_f = 0.0;  // of F
  double sup_f = 0.0;
  double inf_f = 0.0;
  double mean_f = 0.0;  // dV~-weighted
  double osc_f = 0.0;
  double energy = 0.0;  // E = 1/2 int phi^2 dV~
  double lambda1 = 0.0;
  bool lambda_fresh = false;
  double poincare_gradient = 0.0;  // Dirichlet energy of phi, real metric (fresh rows only)
  double poincare_bound = 0.0;     // lambda1 times the L2 mass of phi
  double min_trace = 0.0;          // n + Delta u
  double max_trace = 0.0;
  double min_eig = 0.0;
  double max_eig = 0.0;
  double s_sup = 0.0;
  double yau2_margin = 0.0;
  double volume = 0.0;  // int dV~
  double sup_phi = 0.0;
};

// Carries the warm-start block between lambda1 evaluations.
class MonitorContext {
 public:
  explicit MonitorContext(MonitorOptions opts = {}) : opts_(opts) {}
  const MonitorOptions& options() const noexcept { return opts_; }
  MonitorRow update(const FlowState& s, const ScalarField& f, bool force_lambda = false);

 private:
  MonitorOptions opts_;
  std::vector<RealArray> block_;
  double last_lambda_ = 0.0;
  long last_lambda_step_ = -1;
  double last_s_ = 0.0;
  double last_yau_ = 0.0;
};

// Third-order quantity g~^{i rbar} g~^{jbar s} g~^{k tbar} v_{i jbar k} v_{rbar s tbar}
// with v = u and flat derivatives, per point.
ScalarField third_order_quantity(const KahlerPotential& p, const HermitianMetricField& gt);

// min over the grid of RHS - LHS in Yau's inequality II for the flat background,
// with f the snapshot's log YC(u). Requires n >= 2 (std::domain_error otherwise).
double yau2_margin(const KahlerPotential& p, double c = 2.0);
ScalarField yau2_margin_field(const KahlerPotential& p, double c = 2.0);

struct DecayFit {
  double rate = 0.0;
  double prefactor = 0.0;
  double r2 = 0.0;
  int samples = 0;
};

// Least squares log v = log C - a t over t >= t_start and v > 1e-13; needs >= 10 samples.
DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& v, double t_start = 0.0);

// sup | Ric(g~) - Ric(g0) - ddbar f |.
double limit_ricci_check(const KahlerPotential& u_inf, const ScalarField& f);

struct FlowConfig {
  FlowScheme scheme = FlowScheme::imex;
  double dt = 0.0;            // 0: scheme default
  double imex_factor = 50.0;
  double stop_tol = 1e-9;     // on osc F
  double residual_tol = 1e-6;
  long max_steps = 200000;
  int record_every = 1;
  MonitorOptions monitors;
  bool record_monitors = true;
  int checkpoint_every = 0;   // 0: off
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

struct FlowResult {
  FlowState state;
  double c_bar = 0.0;
  double limit_residual = 0.0;  // sup |log YC(u) + f - c_bar|
  std::vector<MonitorRow> monitors;
};

// Steps until osc F < stop_tol. Throws ConvergenceError past max_steps.
FlowResult run_flow(const ScalarField& f, const ComplexTorusGrid& grid, const FlowConfig& cfg = {});

std::string monitor_csv_header();
std::string monitor_csv_row(const MonitorRow& r);
std::string format_flow_report(const FlowResult& r, const std::optional<DecayFit>& omega_fit,
                               const std::optional<DecayFit>& energy_fit);

}  // namespace calabi
