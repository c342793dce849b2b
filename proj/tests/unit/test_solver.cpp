#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "optgrowth/config.hpp"
#include "optgrowth/solver.hpp"
#include "test_support.hpp"

using namespace optgrowth;
using testsupport::beam;
using testsupport::mnorm;
using testsupport::random_vector;

namespace {

AssembledSystem small() { return beam(BoundaryKind::doubly_clamped, 1.0, 0.2, 0.1, 5e-3); }

SolverConfig analytic_cfg(double inv2tau = 10.0) {
  SolverConfig c;
  c.path = SolverPath::analytic;
  c.inv2tau = inv2tau;
  return c;
}

double dense_max_abs(const SparseMatrix& s) { return Eigen::MatrixXd(s).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(ClosedForm, ZeroGradientGivesUniformIsotropicIncrement) {
  const auto sys = small();
  const Vector zero = Vector::Zero(3 * sys.num_elements());
  for (auto w : {ShearWeight::engineering, ShearWeight::frobenius}) {
    const auto g = closed_form_global(sys, zero, 0.05, 10.0, w);
    const auto l = closed_form_local(sys, zero, Vector::Constant(sys.num_elements(), 0.05), 10.0, w);
    for (Index e = 0; e < sys.num_elements(); ++e) {
      EXPECT_LE((g.increment.element(e) - Eigen::Vector3d(0.025, 0.025, 0)).lpNorm<Eigen::Infinity>(), 1e-14);
      EXPECT_LE((l.increment.element(e) - Eigen::Vector3d(0.025, 0.025, 0)).lpNorm<Eigen::Infinity>(), 1e-14);
    }
  }
}

TEST(ClosedForm, LocalOperatorIdentities) {
  const auto sys = small();
  for (auto w : {ShearWeight::engineering, ShearWeight::frobenius}) {
    const auto ops = local_mass_operators(sys, w);
    const Index ne = sys.num_elements();
    EXPECT_EQ(ops.s.nonZeros(), ne);
    SparseMatrix id(ne, ne);
    id.setIdentity();
    EXPECT_LE(dense_max_abs(ops.p * ops.p - ops.p), 1e-12);
    EXPECT_LE(dense_max_abs(SparseMatrix(ops.p.transpose()) - ops.p), 1e-12);
    EXPECT_LE(dense_max_abs(sys.trace_op * ops.sqrt_minv * ops.v - id), 1e-12);
    EXPECT_LE(dense_max_abs(ops.u * ops.sqrt_minv * SparseMatrix(sys.trace_op.transpose()) - id), 1e-12);
    // Projector of rank N_e.
    EXPECT_NEAR(Eigen::MatrixXd(ops.p).trace(), static_cast<double>(ne), 1e-9);
  }
}

TEST(ClosedForm, ZeroSupplyConservesTrace) {
  const auto sys = small();
  std::mt19937_64 rng(1);
  const Vector grad = random_vector(3 * sys.num_elements(), rng);
  const auto g = closed_form_global(sys, grad, 0.0, 10.0);
  EXPECT_NEAR(sys.trace_weights.dot(g.increment.values()), 0.0, 1e-14 * grad.norm());
  const auto l = closed_form_local(sys, grad, Vector::Zero(sys.num_elements()), 10.0);
  EXPECT_LE((sys.trace_op * l.increment.values()).lpNorm<Eigen::Infinity>(), 1e-14 * grad.norm());
}

TEST(ClosedForm, DecomposesIntoGradientAndSupplyParts) {
  const auto sys = small();
  std::mt19937_64 rng(2);
  const Vector grad = random_vector(3 * sys.num_elements(), rng);
  const Vector zero = Vector::Zero(grad.size());
  const Vector gam = Vector::Constant(sys.num_elements(), 0.03);
  const Vector full = closed_form_global(sys, grad, 0.03, 7.0).increment.values();
  const Vector parts =
      closed_form_global(sys, grad, 0.0, 7.0).increment.values() + closed_form_global(sys, zero, 0.03, 7.0).increment.values();
  EXPECT_LE((full - parts).lpNorm<Eigen::Infinity>(), 1e-12);
  const Vector lfull = closed_form_local(sys, grad, gam, 7.0).increment.values();
  const Vector lparts = closed_form_local(sys, grad, 0 * gam, 7.0).increment.values() +
                        closed_form_local(sys, zero, gam, 7.0).increment.values();
  EXPECT_LE((lfull - lparts).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(ClosedForm, LargePenaltyApproachesUniformGrowth) {
  const auto sys = small();
  std::mt19937_64 rng(3);
  const Vector grad = random_vector(3 * sys.num_elements(), rng, 1e-3);
  const auto g = closed_form_global(sys, grad, 0.05, 1e6);
  for (Index e = 0; e < sys.num_elements(); ++e) {
    EXPECT_LE((g.increment.element(e) - Eigen::Vector3d(0.025, 0.025, 0)).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST(ClosedForm, StationarityHoldsExactly) {
  const auto sys = small();
  std::mt19937_64 rng(4);
  const Vector grad = random_vector(3 * sys.num_elements(), rng);
  for (auto w : {ShearWeight::engineering, ShearWeight::frobenius}) {
    const Vector m = penalty_metric(sys, w);
    const auto g = closed_form_global(sys, grad, 0.05, 10.0, w);
    const Vector rg = grad + 10.0 * m.cwiseProduct(g.increment.values()) + g.multipliers[0] * sys.trace_weights;
    EXPECT_LE(rg.lpNorm<Eigen::Infinity>(), 1e-12 * grad.lpNorm<Eigen::Infinity>());
    EXPECT_NEAR(sys.trace_weights.dot(g.increment.values()), 0.05 * sys.domain_area, 1e-14);

    const auto l = closed_form_local(sys, grad, Vector::Constant(sys.num_elements(), 0.05), 10.0, w);
    const Vector rl =
        grad + 10.0 * m.cwiseProduct(l.increment.values()) + sys.trace_op.transpose() * l.multipliers;
    EXPECT_LE(rl.lpNorm<Eigen::Infinity>(), 1e-12 * grad.lpNorm<Eigen::Infinity>());
  }
}

TEST(AnalyticStep, DoublyClampedPresetIsAccretiveAndStationary) {
  const Scenario sc = preset("doubly_clamped");
  const auto sys = build_system(sc);
  SolverConfig cfg = sc.solver;
  cfg.path = SolverPath::analytic;
  const Objective obj(sc.objective);
  const auto step = analytic_step_global(sys, GrowthField(sys.num_elements()), obj, sc.balance, cfg);
  EXPECT_EQ(max_psd_violation(step.increment), 0.0);
  for (bool a : step.psd_active) EXPECT_FALSE(a);
  EXPECT_LE(step.kkt_residual, 1e-9);
  EXPECT_TRUE(step.converged);
  EXPECT_NEAR(step.objective_value, step.psi_value + step.penalty_value, 1e-15);
}

TEST(AnalyticStep, ConstantGradientGivesIdenticalIncrements) {
  const Scenario sc = preset("doubly_clamped");
  const auto sys = build_system(sc);
  SolverConfig cfg = sc.solver;
  cfg.path = SolverPath::analytic;
  const Objective obj(sc.objective);
  GrowthField g(sys.num_elements());
  StepResult first;
  for (int i = 1; i <= 30; ++i) {
    auto s = analytic_step_global(sys, g, obj, sc.balance, cfg);
    if (i == 1) first = s;
    if (i == 30) {
      EXPECT_LE((s.increment.values() - first.increment.values()).lpNorm<Eigen::Infinity>(), 1e-14);
    }
    g = s.growth;
  }
  EXPECT_LE((g.values() - 30.0 * first.increment.values()).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(AnalyticStep, RejectsInequalityAndWrongMode) {
  const auto sys = small();
  const Objective obj(ObjectiveKind::external_work);
  const GrowthField g(sys.num_elements());
  const MassBalance ineq{BalanceMode::global, BalanceRelation::inequality, 0.05, {}};
  EXPECT_THROW(analytic_step_global(sys, g, obj, ineq, analytic_cfg()), ValidationError);
  const MassBalance loc{BalanceMode::local, BalanceRelation::equality, 0.05, {}};
  EXPECT_THROW(analytic_step_global(sys, g, obj, loc, analytic_cfg()), ValidationError);
  EXPECT_NO_THROW(solve_step(sys, g, obj, loc, analytic_cfg()));
}

TEST(AnalyticStep, FixedPointLinearizationIsSelfConsistent) {
  Scenario sc = preset("perimeter");
  sc.target_h = 0.1;
  const auto sys = build_system(sc);
  SolverConfig cfg = sc.solver;
  cfg.path = SolverPath::analytic;
  cfg.gradient_linearization = GradientLinearization::fixed_point;
  const Objective obj(sc.objective);
  const auto step = analytic_step_local(sys, GrowthField(sys.num_elements()), obj, sc.balance, cfg);
  EXPECT_TRUE(step.converged);
  EXPECT_GE(step.linearization_sweeps, 1);
  const Vector g_end = obj.reduced_gradient(sys, step.growth);
  EXPECT_LE((g_end - step.psi_gradient).norm(), 1e-6 * g_end.norm());
  EXPECT_LE(step.kkt_residual, 1e-9);
}

TEST(SolverConfig, Validation) {
  SolverConfig c;
  c.inv2tau = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = SolverConfig{};
  c.initial_step = -1.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = SolverConfig{};
  c.tolerance = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_NO_THROW(SolverConfig{}.validate());
}

TEST(NumericalStep, MatchesAnalyticWhenConeIsSlack) {
  const Scenario sc = preset("doubly_clamped");
  const auto sys = build_system(sc);
  const Objective obj(sc.objective);
  SolverConfig cfg = sc.solver;
  const GrowthField g0(sys.num_elements());
  cfg.path = SolverPath::analytic;
  const auto a = analytic_step_global(sys, g0, obj, sc.balance, cfg);
  cfg.path = SolverPath::numerical;
  const auto n = numerical_step(sys, g0, obj, sc.balance, cfg);
  EXPECT_TRUE(n.converged);
  const Vector m = penalty_metric(sys, cfg.shear_weight);
  EXPECT_LE(mnorm(a.increment.values() - n.increment.values(), m), 1e-6 * mnorm(a.increment.values(), m));
  EXPECT_NEAR(n.multipliers[0], a.multipliers[0], 1e-5 * std::abs(a.multipliers[0]));
  for (bool act : n.psd_active) EXPECT_FALSE(act);
  EXPECT_LE(n.kkt_residual, 1e-5);
}

TEST(NumericalStep, ZeroSupplyAndZeroGradientGivesZero) {
  const auto sys = beam(BoundaryKind::doubly_clamped, 1.0, 0.2, 0.1, 0.0);
  const Objective obj(ObjectiveKind::external_work);
  const MassBalance bal{BalanceMode::global, BalanceRelation::equality, 0.0, {}};
  const auto s = numerical_step(sys, GrowthField(sys.num_elements()), obj, bal, SolverConfig{});
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.increment.values().lpNorm<Eigen::Infinity>(), 0.0);
  const auto a = analytic_step_global(sys, GrowthField(sys.num_elements()), obj, bal, analytic_cfg());
  EXPECT_EQ(a.increment.values().lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(NumericalStep, PerimeterStepIsFeasibleAndStationary) {
  Scenario sc = preset("perimeter");
  sc.target_h = 0.1;
  const auto sys = build_system(sc);
  const Objective obj(sc.objective);
  const auto s = numerical_step(sys, GrowthField(sys.num_elements()), obj, sc.balance, sc.solver);
  EXPECT_TRUE(s.converged);
  EXPECT_LE(s.kkt_residual, 1e-5);
  EXPECT_LE(max_psd_violation(s.increment), 1e-12);
  EXPECT_LE(mass_balance_violation(s.increment, sc.balance, sys), 1e-12);
  EXPECT_NEAR(s.objective_value, s.psi_value + s.penalty_value, 1e-15 * std::abs(s.objective_value));
}

TEST(NumericalStep, MoreInnerIterationsNeverIncreaseTheObjective) {
  Scenario sc = preset("perimeter");
  sc.target_h = 0.1;
  const auto sys = build_system(sc);
  const Objective obj(sc.objective);
  SolverConfig cfg = sc.solver;
  double prev = std::numeric_limits<double>::infinity();
  for (int k : {0, 1, 2, 4, 8, 16, 64}) {
    cfg.max_inner_iterations = k;
    const auto s = numerical_step(sys, GrowthField(sys.num_elements()), obj, sc.balance, cfg);
    EXPECT_LE(s.objective_value, prev + 1e-14 * std::abs(prev)) << "max_inner " << k;
    EXPECT_LE(s.inner_iterations, k);
    prev = s.objective_value;
  }
}

TEST(NumericalStep, TruncatedSolveShowsLargeResidual) {
  const Scenario sc = preset("doubly_clamped");
  const auto sys = build_system(sc);
  const Objective obj(sc.objective);
  SolverConfig cfg = sc.solver;
  cfg.initial_step = 1e-12;
  cfg.max_inner_iterations = 1;
  const auto bad = numerical_step(sys, GrowthField(sys.num_elements()), obj, sc.balance, cfg);
  EXPECT_FALSE(bad.converged);
  const auto good = numerical_step(sys, GrowthField(sys.num_elements()), obj, sc.balance, sc.solver);
  EXPECT_GT(bad.kkt_residual, 1e-2);
  EXPECT_LE(good.kkt_residual, 1e-5);
}

TEST(Kkt, ProjectedResidualVanishesOnlyAtTheSolution) {
  const Scenario sc = preset("doubly_clamped");
  const auto sys = build_system(sc);
  const Objective obj(sc.objective);
  const GrowthField g0(sys.num_elements());
  const auto s = numerical_step(sys, g0, obj, sc.balance, sc.solver);
  EXPECT_LE(projected_kkt_residual(sys, g0, s.increment, obj, sc.balance, sc.solver), 1e-5);
  GrowthField uniform(sys.num_elements());
  for (Index e = 0; e < sys.num_elements(); ++e) uniform.set_element(e, {0.025, 0.025, 0.0});
  EXPECT_GT(projected_kkt_residual(sys, g0, uniform, obj, sc.balance, sc.solver), 1e-2);
}
