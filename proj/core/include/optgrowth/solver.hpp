#pragma once

#include <vector>

#include "optgrowth/constraints.hpp"
#include "optgrowth/fem.hpp"
#include "optgrowth/growth_field.hpp"
#include "optgrowth/objectives.hpp"

namespace optgrowth {

enum class SolverPath { analytic, numerical };
enum class GradientLinearization { previous, fixed_point };

struct SolverConfig {
  SolverPath path = SolverPath::numerical;
  double inv2tau = 10.0;  // 1/(2 tau), weight of the increment penalty
  int max_inner_iterations = 2000;
  GradientLinearization gradient_linearization = GradientLinearization::previous;
  ShearWeight shear_weight = ShearWeight::engineering;
  /// First trial step of the projected-gradient iteration; 0 means 2 tau.
  double initial_step = 0.0;
  /// Stationarity tolerance, relative to 1 + |subproblem objective|.
  double tolerance = 1e-7;

  void validate() const;
};

struct StepResult {
  GrowthField growth;      // gamma^(i) = gamma^(i-1) + increment
  GrowthField increment;
  Vector displacement;     // full 2N vector at gamma^(i)
  Vector multipliers;      // size 1 (global) or N_e (local)
  /// Gradient of Psi the step was built from (analytic path: the
  /// linearization point; numerical path: at gamma^(i)).
  Vector psi_gradient;
  double kkt_residual = 0.0;
  double psi_value = 0.0;        // Psi(gamma^(i))
  double penalty_value = 0.0;    // (1/(4 tau)) M increment . increment
  double objective_value = 0.0;  // psi_value + penalty_value
  std::vector<bool> psd_active;
  bool converged = true;
  int inner_iterations = 0;
  int linearization_sweeps = 0;
};

/// Closed-form step under a global equality balance for a given gradient:
/// increment = -2tau M^{-1/2}(I - n n^T)M^{-1/2} grad + Gamma|Omega| M^{-1}a / |M^{-1/2}a|^2.
/// Also returns the multiplier lambda (stationarity grad + inv2tau M d + lambda a = 0).
struct IncrementWithMultipliers {
  GrowthField increment;
  Vector multipliers;
};
IncrementWithMultipliers closed_form_global(const AssembledSystem& sys, const Vector& grad, double gamma,
                                            double inv2tau, ShearWeight weight = ShearWeight::engineering);
/// Closed-form step under a local equality balance A d = Gamma (per element).
IncrementWithMultipliers closed_form_local(const AssembledSystem& sys, const Vector& grad,
                                           const Vector& element_gamma, double inv2tau,
                                           ShearWeight weight = ShearWeight::engineering);

/// Sparse operators of the local closed form, all in terms of the penalty
/// metric M: S = A M^{-1} A^T (diagonal), P = M^{-1/2} A^T S^{-1} A M^{-1/2},
/// U = S^{-1} A M^{-1/2}, V = M^{-1/2} A^T S^{-1}.
struct LocalMassOperators {
  SparseMatrix sqrt_minv;  // M^{-1/2}
  SparseMatrix s;
  SparseMatrix p;
  SparseMatrix u;
  SparseMatrix v;
};
LocalMassOperators local_mass_operators(const AssembledSystem& sys, ShearWeight weight = ShearWeight::engineering);

/// One analytic step (global balance). The gradient is evaluated at
/// gamma_prev, or iterated to self-consistency in fixed-point mode.
StepResult analytic_step_global(const AssembledSystem& sys, const GrowthField& gamma_prev,
                                const Objective& objective, const MassBalance& balance,
                                const SolverConfig& config);
StepResult analytic_step_local(const AssembledSystem& sys, const GrowthField& gamma_prev,
                               const Objective& objective, const MassBalance& balance,
                               const SolverConfig& config);

/// Proximal projected-gradient solution of the full step subproblem
/// min Psi(gamma_prev + d) + (inv2tau/2) M d . d over the balance set
/// intersected with per-element PSD increments.
StepResult numerical_step(const AssembledSystem& sys, const GrowthField& gamma_prev,
                          const Objective& objective, const MassBalance& balance,
                          const SolverConfig& config);

/// Dispatches on config.path and balance.mode.
StepResult solve_step(const AssembledSystem& sys, const GrowthField& gamma_prev, const Objective& objective,
                      const MassBalance& balance, const SolverConfig& config);

/// Analytic path: stationarity norm sqrt(r . M^{-1} r) with
/// r = grad + inv2tau M d + (lambda a | A^T lambda) for the step's gradient.
/// Numerical path: projected_kkt_residual. Both are maxed with the balance
/// violation.
double kkt_residual(const AssembledSystem& sys, const StepResult& step, const Objective& objective,
                    const MassBalance& balance, const SolverConfig& config);

/// Projected-gradient stationarity measure of the numerical subproblem at
/// `increment`, in the M norm, maxed with balance and PSD violations.
double projected_kkt_residual(const AssembledSystem& sys, const GrowthField& gamma_prev,
                              const GrowthField& increment, const Objective& objective,
                              const MassBalance& balance, const SolverConfig& config);

}  // namespace optgrowth
