#include "optgrowth/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace optgrowth {
namespace {

constexpr double kArmijo = 1e-4;
constexpr double kFixedPointTol = 1e-8;
constexpr int kFixedPointSweeps = 50;
constexpr int kMaxHalvings = 60;

double mnorm(const Vector& v, const Vector& m) { return std::sqrt(v.dot(m.cwiseProduct(v))); }

double dual_norm(const Vector& r, const Vector& m) { return std::sqrt(r.dot(r.cwiseQuotient(m))); }

std::vector<bool> violated_elements(const GrowthField& inc) {
  const Vector c = c_vector(inc);
  std::vector<bool> out(static_cast<std::size_t>(c.size()));
  for (Index e = 0; e < c.size(); ++e) out[static_cast<std::size_t>(e)] = c[e] > 1e-10;
  return out;
}

void require_equality(const MassBalance& balance, BalanceMode mode) {
  if (balance.relation != BalanceRelation::equality) {
    throw ValidationError("analytic step requires an equality mass balance; use the numerical path");
  }
  if (balance.mode != mode) throw ValidationError("analytic step called with the wrong balance mode");
}

// Shared driver of the two analytic steps: `form` maps a gradient to the
// closed-form increment and multipliers.
template <class Form>
StepResult analytic_step(const AssembledSystem& sys, const GrowthField& gamma_prev, const Objective& objective,
                         const MassBalance& balance, const SolverConfig& config, Form form) {
  config.validate();
  if (gamma_prev.num_elements() != sys.num_elements()) throw ValidationError("step: growth size mismatch");
  const Vector m = penalty_metric(sys, config.shear_weight);

  StepResult r;
  r.psi_gradient = objective.reduced_gradient(sys, gamma_prev);
  auto cf = form(r.psi_gradient);
  if (config.gradient_linearization == GradientLinearization::fixed_point &&
      !objective.has_constant_gradient()) {
    r.converged = false;
    for (int sweep = 1; sweep <= kFixedPointSweeps; ++sweep) {
      const Vector g = objective.reduced_gradient(sys, GrowthField(gamma_prev.values() + cf.increment.values()));
      auto next = form(g);
      const double change = mnorm(next.increment.values() - cf.increment.values(), m);
      cf = std::move(next);
      r.psi_gradient = g;
      r.linearization_sweeps = sweep;
      if (change <= kFixedPointTol * mnorm(cf.increment.values(), m)) {
        r.converged = true;
        break;
      }
    }
  }
  r.increment = std::move(cf.increment);
  r.multipliers = std::move(cf.multipliers);
  r.growth = GrowthField(gamma_prev.values() + r.increment.values());
  r.displacement = solve_equilibrium(sys, r.growth);
  r.psi_value = objective.value(sys, r.displacement);
  r.penalty_value = 0.5 * config.inv2tau * r.increment.values().dot(m.cwiseProduct(r.increment.values()));
  r.objective_value = r.psi_value + r.penalty_value;
  r.psd_active = violated_elements(r.increment);
  r.kkt_residual = kkt_residual(sys, r, objective, balance, config);
  return r;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(inv2tau > 0.0) || !std::isfinite(inv2tau)) throw ValidationError("solver.inv2tau must be positive");
  if (max_inner_iterations < 0) throw ValidationError("solver: max_inner_iterations must be non-negative");
  if (initial_step < 0.0) throw ValidationError("solver: initial_step must be non-negative");
  if (!(tolerance > 0.0)) throw ValidationError("solver: tolerance must be positive");
}

IncrementWithMultipliers closed_form_global(const AssembledSystem& sys, const Vector& grad, double gamma,
                                            double inv2tau, ShearWeight weight) {
  const Vector m = penalty_metric(sys, weight);
  const Vector& a = sys.trace_weights;
  const Vector minv_a = a.cwiseQuotient(m);
  const Vector minv_g = grad.cwiseQuotient(m);
  const double q2 = a.dot(minv_a);  // |M^{-1/2} a|^2
  const double a_minv_g = a.dot(minv_g);
  const double target = gamma * sys.domain_area;

  Vector d = -(minv_g - (a_minv_g / q2) * minv_a) / inv2tau + (target / q2) * minv_a;
  const double lambda = -(a_minv_g + inv2tau * target) / q2;
  return {GrowthField(std::move(d)), Vector::Constant(1, lambda)};
}

LocalMassOperators local_mass_operators(const AssembledSystem& sys, ShearWeight weight) {
  const Vector m = penalty_metric(sys, weight);
  const Index n = m.size();
  const Index ne = sys.num_elements();
  LocalMassOperators ops;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) trip.emplace_back(i, i, 1.0 / std::sqrt(m[i]));
  ops.sqrt_minv.resize(n, n);
  ops.sqrt_minv.setFromTriplets(trip.begin(), trip.end());

  const SparseMatrix a_sq = sys.trace_op * ops.sqrt_minv;  // A M^{-1/2}
  ops.s = a_sq * a_sq.transpose();
  ops.s.makeCompressed();
  std::vector<Eigen::Triplet<double>> sinv_trip;
  for (Index e = 0; e < ne; ++e) {
    const double see = ops.s.coeff(e, e);
    if (!(see > 0.0)) throw NumericalError("local balance operator A M^{-1} A^T is singular");
    sinv_trip.emplace_back(e, e, 1.0 / see);
  }
  // A has one nonzero pattern per row and disjoint rows, so S is diagonal.
  if (ops.s.nonZeros() != ne) throw NumericalError("A M^{-1} A^T is not diagonal");
  SparseMatrix s_inv(ne, ne);
  s_inv.setFromTriplets(sinv_trip.begin(), sinv_trip.end());

  ops.u = s_inv * a_sq;
  ops.v = SparseMatrix(a_sq.transpose()) * s_inv;
  ops.p = ops.v * a_sq;
  return ops;
}

IncrementWithMultipliers closed_form_local(const AssembledSystem& sys, const Vector& grad,
                                           const Vector& element_gamma, double inv2tau, ShearWeight weight) {
  const Index ne = sys.num_elements();
  if (element_gamma.size() != ne) throw ValidationError("local step: gamma has wrong length");
  const auto ops = local_mass_operators(sys, weight);
  const Vector h = ops.sqrt_minv * grad;
  Vector d = -(ops.sqrt_minv * (h - ops.p * h)) / inv2tau + ops.sqrt_minv * (ops.v * element_gamma);
  Vector s_inv_gamma(ne);
  for (Index e = 0; e < ne; ++e) s_inv_gamma[e] = element_gamma[e] / ops.s.coeff(e, e);
  Vector lambda = -(ops.u * h + inv2tau * s_inv_gamma);
  return {GrowthField(std::move(d)), std::move(lambda)};
}

StepResult analytic_step_global(const AssembledSystem& sys, const GrowthField& gamma_prev,
                                const Objective& objective, const MassBalance& balance,
                                const SolverConfig& config) {
  require_equality(balance, BalanceMode::global);
  balance.validate(sys.num_elements());
  return analytic_step(sys, gamma_prev, objective, balance, config, [&](const Vector& g) {
    return closed_form_global(sys, g, balance.gamma, config.inv2tau, config.shear_weight);
  });
}

StepResult analytic_step_local(const AssembledSystem& sys, const GrowthField& gamma_prev,
                               const Objective& objective, const MassBalance& balance,
                               const SolverConfig& config) {
  require_equality(balance, BalanceMode::local);
  balance.validate(sys.num_elements());
  const Vector targets = balance.element_targets(sys.num_elements());
  return analytic_step(sys, gamma_prev, objective, balance, config, [&](const Vector& g) {
    return closed_form_local(sys, g, targets, config.inv2tau, config.shear_weight);
  });
}

StepResult numerical_step(const AssembledSystem& sys, const GrowthField& gamma_prev,
                          const Objective& objective, const MassBalance& balance,
                          const SolverConfig& config) {
  config.validate();
  const Index ne = sys.num_elements();
  if (gamma_prev.num_elements() != ne) throw ValidationError("step: growth size mismatch");
  balance.validate(ne);

  const Vector m = penalty_metric(sys, config.shear_weight);
  const Vector minv = m.cwiseInverse();
  const double two_tau = 1.0 / config.inv2tau;
  const double eps = std::numeric_limits<double>::epsilon();

  struct Eval {
    double f = 0.0;
    double psi = 0.0;
    Vector grad_psi;
    Vector u;
  };
  auto evaluate = [&](const Vector& d) {
    Eval ev;
    ev.u = solve_equilibrium(sys, GrowthField(gamma_prev.values() + d));
    ev.psi = objective.value(sys, ev.u);
    ev.grad_psi = objective.reduced_gradient_at(sys, ev.u);
    ev.f = ev.psi + 0.5 * config.inv2tau * d.dot(m.cwiseProduct(d));
    return ev;
  };
  auto project = [&](const Vector& z) {
    return project_feasible_increment(GrowthField(z), balance, sys, config.shear_weight);
  };

  Vector d = project(Vector::Zero(3 * ne)).increment.values();
  Eval cur = evaluate(d);
  double s = config.initial_step > 0.0 ? config.initial_step : two_tau;

  StepResult r;
  r.converged = false;
  FeasibleProjection natural;
  Vector g;
  for (;;) {
    g = cur.grad_psi + config.inv2tau * m.cwiseProduct(d);
    natural = project(d - two_tau * minv.cwiseProduct(g));
    const Vector gap = (d - natural.increment.values()) / two_tau;
    if (mnorm(gap, m) <= config.tolerance * (1.0 + std::abs(cur.f))) {
      r.converged = true;
      break;
    }
    if (r.inner_iterations >= config.max_inner_iterations) break;

    bool accepted = false;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      const Vector trial =
          s == two_tau ? natural.increment.values() : project(d - s * minv.cwiseProduct(g)).increment.values();
      Eval next = evaluate(trial);
      if (next.f <= cur.f + kArmijo * g.dot(trial - d) + 4.0 * eps * std::abs(cur.f)) {
        d = trial;
        cur = std::move(next);
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;
    ++r.inner_iterations;
    s = std::min(two_tau, 2.0 * s);
  }

  r.increment = GrowthField(d);
  r.growth = GrowthField(gamma_prev.values() + d);
  r.displacement = std::move(cur.u);
  r.psi_gradient = std::move(cur.grad_psi);
  r.psi_value = cur.psi;
  r.penalty_value = cur.f - cur.psi;
  r.objective_value = cur.f;
  r.multipliers = natural.multipliers * config.inv2tau;

  // An element is cone-active when its Lagrangian point before the cone
  // projection lies outside the PSD cone.
  Vector shift = r.multipliers.size() == 1 ? Vector(r.multipliers[0] * sys.trace_weights)
                                           : Vector(sys.trace_op.transpose() * r.multipliers);
  const Vector pre = d - two_tau * minv.cwiseProduct(g + shift);
  r.psd_active.assign(static_cast<std::size_t>(ne), false);
  for (Index e = 0; e < ne; ++e) {
    const Eigen::Vector3d v = pre.segment<3>(3 * e);
    r.psd_active[static_cast<std::size_t>(e)] = lambda_min_2x2(v) < -1e-10 * (1.0 + v.norm());
  }
  r.kkt_residual = kkt_residual(sys, r, objective, balance, config);
  return r;
}

StepResult solve_step(const AssembledSystem& sys, const GrowthField& gamma_prev, const Objective& objective,
                      const MassBalance& balance, const SolverConfig& config) {
  if (config.path == SolverPath::numerical) return numerical_step(sys, gamma_prev, objective, balance, config);
  if (balance.mode == BalanceMode::global) return analytic_step_global(sys, gamma_prev, objective, balance, config);
  return analytic_step_local(sys, gamma_prev, objective, balance, config);
}

double kkt_residual(const AssembledSystem& sys, const StepResult& step, const Objective& objective,
                   const MassBalance& balance, const SolverConfig& config) {
  if (config.path == SolverPath::numerical) {
    const GrowthField prev(step.growth.values() - step.increment.values());
    return projected_kkt_residual(sys, prev, step.increment, objective, balance, config);
  }
  const Vector m = penalty_metric(sys, config.shear_weight);
  Vector r = step.psi_gradient + config.inv2tau * m.cwiseProduct(step.increment.values());
  if (balance.mode == BalanceMode::global) {
    r += step.multipliers[0] * sys.trace_weights;
  } else {
    r += sys.trace_op.transpose() * step.multipliers;
  }
  return std::max(dual_norm(r, m), mass_balance_violation(step.increment, balance, sys));
}

double projected_kkt_residual(const AssembledSystem& sys, const GrowthField& gamma_prev,
                              const GrowthField& increment, const Objective& objective,
                              const MassBalance& balance, const SolverConfig& config) {
  const Vector m = penalty_metric(sys, config.shear_weight);
  const double two_tau = 1.0 / config.inv2tau;
  const Vector& d = increment.values();
  const Vector u = solve_equilibrium(sys, GrowthField(gamma_prev.values() + d));
  const Vector g = objective.reduced_gradient_at(sys, u) + config.inv2tau * m.cwiseProduct(d);
  const auto natural =
      project_feasible_increment(GrowthField(Vector(d - two_tau * g.cwiseQuotient(m))), balance, sys,
                                 config.shear_weight);
  const double stationarity = mnorm((d - natural.increment.values()) / two_tau, m);
  return std::max({stationarity, mass_balance_violation(increment, balance, sys), max_psd_violation(increment)});
}

}  // namespace optgrowth
