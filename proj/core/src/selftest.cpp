#include "optgrowth/selftest.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "optgrowth/constraints.hpp"
#include "optgrowth/evolution.hpp"
#include "optgrowth/fem.hpp"
#include "optgrowth/mesh.hpp"
#include "optgrowth/objectives.hpp"
#include "optgrowth/postprocess.hpp"
#include "optgrowth/solver.hpp"

namespace optgrowth {
namespace {

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

// Result with the measured error and its bound.
SelftestResult bound(const std::string& name, double err, double tol) {
  return {name, err <= tol, "error " + sci(err) + " (bound " + sci(tol) + ")"};
}

AssembledSystem small_beam(BoundaryKind bc, double p) {
  TriMesh mesh = generate_rect_mesh(1.0, 0.2, 0.1);
  apply_boundary_conditions(mesh, bc);
  SurfaceLoad load;
  load.traction = Point2(0.0, -p);
  return assemble(mesh, ElasticLaw{1.0, 0.3}, load);
}

Vector random_vector(Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

double fd_gradient_error(const AssembledSystem& sys, const Objective& obj, std::mt19937_64& rng) {
  const GrowthField g0(random_vector(3 * sys.num_elements(), rng, 0.02));
  const Vector grad = obj.reduced_gradient(sys, g0);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Vector dir = random_vector(grad.size(), rng);
    const double h = 1e-5;
    const double fd = (obj.reduced_value(sys, GrowthField(Vector(g0.values() + h * dir))) -
                       obj.reduced_value(sys, GrowthField(Vector(g0.values() - h * dir)))) /
                      (2.0 * h);
    const double an = grad.dot(dir);
    worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-12));
  }
  return worst;
}

}  // namespace

std::vector<SelftestResult> run_selftest() {
  std::vector<SelftestResult> out;
  auto check = [&](const std::string& name, const std::function<SelftestResult()>& f) {
    try {
      out.push_back(f());
      out.back().name = name;
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  std::mt19937_64 rng(2024);

  check("lambda_min closed form", [] {
    const double err = std::abs(lambda_min_2x2({1, 1, 0}) - 1) + std::abs(lambda_min_2x2({1, -1, 0}) + 1) +
                       std::abs(lambda_min_2x2({0, 0, 2}) + 1);
    return bound("", err, 1e-15);
  });
  check("spectral PSD projection", [] {
    return bound("", (project_psd({0, 0, 2}) - Eigen::Vector3d(0.5, 0.5, 1)).norm() +
                         (project_psd({1, -1, 0}) - Eigen::Vector3d(1, 0, 0)).norm(),
                 1e-14);
  });
  check("reference triangle geometry", [] {
    TriMesh m({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
    const auto g = element_geometry(m, 0);
    Eigen::Matrix<double, 3, 2> expect;
    expect << -1, -1, 1, 0, 0, 1;
    return bound("", std::abs(g.area - 0.5) + (g.hat_gradients - expect).norm(), 1e-15);
  });
  check("undeformed perimeter", [] {
    const TriMesh m = generate_rect_mesh(1.0, 0.5, 0.1);
    return bound("", std::abs(perimeter_value(Vector::Zero(2 * m.num_nodes()), m) - 3.0), 1e-12);
  });
  check("eigenstrain consistency B E(u) = K u", [&] {
    const auto sys = small_beam(BoundaryKind::doubly_clamped, 0.0);
    const Vector uf = random_vector(sys.num_free(), rng);
    const Vector u = sys.reduction.expand(uf);
    const GrowthField strain = element_strains(sys, u);
    const Vector ku = sys.stiffness * uf;
    return bound("", (sys.coupling * strain.values() - ku).norm() / ku.norm(), 1e-10);
  });
  check("external-work reduced gradient vs finite differences", [&] {
    const auto sys = small_beam(BoundaryKind::cantilever, 1e-3);
    return bound("", fd_gradient_error(sys, Objective(ObjectiveKind::external_work), rng), 1e-5);
  });
  check("perimeter reduced gradient vs finite differences", [&] {
    const auto sys = small_beam(BoundaryKind::free_isostatic, 0.0);
    return bound("", fd_gradient_error(sys, Objective(ObjectiveKind::perimeter), rng), 1e-5);
  });
  check("closed-form steps with zero gradient", [] {
    const auto sys = small_beam(BoundaryKind::doubly_clamped, 0.0);
    const Vector zero = Vector::Zero(3 * sys.num_elements());
    const double gamma = 0.05;
    const auto glob = closed_form_global(sys, zero, gamma, 10.0);
    const auto loc = closed_form_local(sys, zero, Vector::Constant(sys.num_elements(), gamma), 10.0);
    double err = 0.0;
    for (Index e = 0; e < sys.num_elements(); ++e) {
      const Eigen::Vector3d expect(gamma / 2, gamma / 2, 0);
      err = std::max({err, (glob.increment.element(e) - expect).lpNorm<Eigen::Infinity>(),
                      (loc.increment.element(e) - expect).lpNorm<Eigen::Infinity>()});
    }
    return bound("", err, 1e-12);
  });
  check("local projection identities", [] {
    const auto sys = small_beam(BoundaryKind::doubly_clamped, 0.0);
    const auto ops = local_mass_operators(sys);
    const SparseMatrix pp = ops.p * ops.p;
    const SparseMatrix pt = ops.p.transpose();
    const SparseMatrix av = sys.trace_op * ops.sqrt_minv * ops.v;
    const SparseMatrix ua = ops.u * ops.sqrt_minv * SparseMatrix(sys.trace_op.transpose());
    SparseMatrix id(sys.num_elements(), sys.num_elements());
    id.setIdentity();
    const double err = std::max({Eigen::MatrixXd(pp - ops.p).cwiseAbs().maxCoeff(),
                                 Eigen::MatrixXd(pt - ops.p).cwiseAbs().maxCoeff(),
                                 Eigen::MatrixXd(av - id).cwiseAbs().maxCoeff(),
                                 Eigen::MatrixXd(ua - id).cwiseAbs().maxCoeff()});
    return bound("", err, 1e-10);
  });
  check("feasible projection: dual root vs Dykstra", [&] {
    const auto sys = small_beam(BoundaryKind::doubly_clamped, 0.0);
    const GrowthField z(random_vector(3 * sys.num_elements(), rng, 0.1));
    const MassBalance bal{BalanceMode::global, BalanceRelation::equality, 0.05, {}};
    const auto exact = project_feasible_increment(z, bal, sys);
    const auto ref = project_feasible_increment_dykstra(z, bal, sys, ShearWeight::engineering, 20000, 1e-13);
    const double err = (exact.increment.values() - ref.values()).lpNorm<Eigen::Infinity>();
    const double feas = std::max(mass_balance_violation(exact.increment, bal, sys),
                                 max_psd_violation(exact.increment));
    return bound("", std::max(err, feas), 1e-8);
  });
  check("numerical step matches analytic step when the cone is slack", [] {
    const auto sys = small_beam(BoundaryKind::doubly_clamped, 5e-3);
    const Objective obj(ObjectiveKind::external_work);
    const MassBalance bal{BalanceMode::global, BalanceRelation::equality, 0.05, {}};
    SolverConfig cfg;
    cfg.inv2tau = 1e3;
    const GrowthField g0(sys.num_elements());
    const auto a = analytic_step_global(sys, g0, obj, bal, cfg);
    const auto n = numerical_step(sys, g0, obj, bal, cfg);
    const Vector m = penalty_metric(sys, cfg.shear_weight);
    const Vector d = a.increment.values() - n.increment.values();
    return bound("", std::sqrt(d.dot(m.cwiseProduct(d))), 1e-6);
  });
  check("shape metrics of the undeformed rectangle", [] {
    const TriMesh m = generate_rect_mesh(1.0, 0.5, 0.1);
    const auto s = shape_metrics(Vector::Zero(2 * m.num_nodes()), m);
    return bound("", std::abs(s.roundness - 4.0 * std::numbers::pi * 0.5 / 9.0) + std::abs(s.area - 0.5), 1e-12);
  });
  return out;
}

}  // namespace optgrowth
