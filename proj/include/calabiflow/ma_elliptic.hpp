#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "calabiflow/errors.hpp"
#include "calabiflow/kahler.hpp"

namespace calabi {

// Path and solver controls for det(g0 + ddbar u) / det g0 = A e^{t f + c u}.
struct ContinuityConfig {
  std::vector<double> t_steps;  // empty: 11 uniform steps on [0, 1]
  double newton_tol = 1e-10;    // sup-norm of the log residual
  int newton_max_iters = 60;
  double damping = 1.0;
  double linear_tol = 1e-10;    // relative, preconditioned CG
  int linear_max_iters = 1000;
  // Optional zeroth-order term: the residual gains -c u and the linearization -c.
  // With c > 0 the mean-zero gauge is dropped and A stays at its normalization value.
  double c = 0.0;

  std::vector<double> path() const;
  void validate() const;
};

struct MASolution {
  KahlerPotential u;
  double A = 1.0;
  double residual = 0.0;
  double t = 0.0;
  int iterations = 0;
  std::vector<int> iterations_per_t;
  std::vector<double> t_values;
  std::vector<double> residual_history;  // accepted Newton iterates of the last solve
};

// Newton or continuation failure. Carries the last accepted iterate.
class MASolveError : public ConvergenceError {
 public:
  MASolveError(const std::string& what, int iterations, double residual, double t, bool admissibility,
               std::shared_ptr<const MASolution> last)
      : ConvergenceError(what, iterations, residual), t_(t), admissibility_(admissibility), last_(std::move(last)) {}
  double t() const noexcept { return t_; }
  bool admissibility_lost() const noexcept { return admissibility_; }
  const MASolution* last_good() const noexcept { return last_.get(); }

 private:
  double t_;
  bool admissibility_;
  std::shared_ptr<const MASolution> last_;
};

// Vol / int e^{t f} dV0.
double normalization_constant(const ScalarField& f, double t, const HermitianMetricField& g0);
double normalization_constant(const ScalarField& f, double t);

// Damped Newton iteration at fixed t from an admissible starting potential.
MASolution newton_solve(const ScalarField& f, double t, const KahlerPotential& u_init, const ContinuityConfig& cfg = {});
MASolution newton_solve(const ScalarField& f, double t, const ComplexTorusGrid& grid, const ContinuityConfig& cfg = {});

// March t along the configured path with warm starts; returns the t = 1 solution.
MASolution continuity_solve(const ScalarField& f, const ComplexTorusGrid& grid, const ContinuityConfig& cfg = {});

struct APrioriReport {
  double trace_min = 0.0;  // n + Delta u over the grid
  double trace_max = 0.0;
  double oscillation = 0.0;
  double eigenvalue_min = 0.0;  // of g~ relative to g0
  double eigenvalue_max = 0.0;
  double residual = 0.0;        // sup |log YC(u) - c u - t f - log A|
};

// Throws AdmissibilityError if n + Delta u fails to be positive somewhere.
APrioriReport a_priori_report(const MASolution& sol, const ScalarField& f, double c = 0.0);

// Key-value text: final residual, A, per-t iteration counts and the report block.
std::string format_report(const MASolution& sol, const APrioriReport& report);

}  // namespace calabi
