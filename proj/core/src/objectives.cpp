#include "optgrowth/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace optgrowth {
namespace {

Point2 deformed(const TriMesh& mesh, const Vector& u, Index v) {
  return mesh.node(v) + Point2(u[2 * v], u[2 * v + 1]);
}

void check_displacement(const Vector& u, const TriMesh& mesh) {
  if (u.size() != 2 * mesh.num_nodes()) {
    throw ValidationError("displacement has length " + std::to_string(u.size()) + ", expected " +
                          std::to_string(2 * mesh.num_nodes()));
  }
}

}  // namespace

double external_work_value(const AssembledSystem& sys, const Vector& displacement) {
  return sys.load.dot(sys.reduction.restrict_to_free(displacement));
}

Vector external_work_reduced_grad(const AssembledSystem& sys) {
  return sys.coupling.transpose() * sys.solve_free(sys.load);
}

double perimeter_value(const Vector& displacement, const TriMesh& mesh) {
  check_displacement(displacement, mesh);
  const auto& loop = mesh.boundary_loop();
  const std::size_t nb = loop.size();
  double p = 0.0;
  for (std::size_t j = 0; j < nb; ++j) {
    p += (deformed(mesh, displacement, loop[(j + 1) % nb]) - deformed(mesh, displacement, loop[j])).norm();
  }
  return p;
}

Index count_degenerate_boundary_edges(const Vector& displacement, const TriMesh& mesh) {
  check_displacement(displacement, mesh);
  const auto& loop = mesh.boundary_loop();
  const std::size_t nb = loop.size();
  Index count = 0;
  for (std::size_t j = 0; j < nb; ++j) {
    const Point2 edge = deformed(mesh, displacement, loop[(j + 1) % nb]) - deformed(mesh, displacement, loop[j]);
    if (edge.norm() == 0.0) ++count;
  }
  return count;
}

Vector perimeter_grad_u(const Vector& displacement, const TriMesh& mesh) {
  check_displacement(displacement, mesh);
  const auto& loop = mesh.boundary_loop();
  const std::size_t nb = loop.size();
  std::vector<Point2> unit(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    const Point2 edge = deformed(mesh, displacement, loop[(j + 1) % nb]) - deformed(mesh, displacement, loop[j]);
    const double len = edge.norm();
    if (len == 0.0) {
      throw NumericalError("perimeter gradient undefined: deformed boundary edge (" +
                           std::to_string(loop[j]) + "," + std::to_string(loop[(j + 1) % nb]) +
                           ") has zero length");
    }
    unit[j] = edge / len;
  }
  Vector g = Vector::Zero(displacement.size());
  for (std::size_t j = 0; j < nb; ++j) {
    const Point2 d = unit[(j + nb - 1) % nb] - unit[j];
    g[2 * loop[j]] = d.x();
    g[2 * loop[j] + 1] = d.y();
  }
  return g;
}

Vector perimeter_reduced_grad(const Vector& displacement, const AssembledSystem& sys) {
  const Vector g = perimeter_grad_u(displacement, *sys.mesh);
  return sys.coupling.transpose() * sys.solve_free(sys.reduction.restrict_to_free(g));
}

double Objective::value(const AssembledSystem& sys, const Vector& displacement) const {
  return kind_ == ObjectiveKind::external_work ? external_work_value(sys, displacement)
                                               : perimeter_value(displacement, *sys.mesh);
}

Vector Objective::grad_u(const AssembledSystem& sys, const Vector& displacement) const {
  if (kind_ == ObjectiveKind::external_work) return sys.reduction.expand(sys.load);
  return perimeter_grad_u(displacement, *sys.mesh);
}

double Objective::reduced_value(const AssembledSystem& sys, const GrowthField& growth) const {
  return value(sys, solve_equilibrium(sys, growth));
}

Vector Objective::reduced_gradient(const AssembledSystem& sys, const GrowthField& growth) const {
  if (kind_ == ObjectiveKind::external_work) return external_work_reduced_grad(sys);
  return perimeter_reduced_grad(solve_equilibrium(sys, growth), sys);
}

Vector Objective::reduced_gradient_at(const AssembledSystem& sys, const Vector& displacement) const {
  if (kind_ == ObjectiveKind::external_work) return external_work_reduced_grad(sys);
  return perimeter_reduced_grad(displacement, sys);
}

Vector perimeter_kernel_direction(const AssembledSystem& sys, Index* kernel_dimension) {
  const auto& mesh = *sys.mesh;
  const auto& loop = mesh.boundary_loop();
  const auto nb = static_cast<Index>(loop.size());
  const Index ne3 = 3 * sys.num_elements();

  // K^{-1} B, column by column.
  const Eigen::MatrixXd dense_b = Eigen::MatrixXd(sys.coupling);
  Eigen::MatrixXd response(sys.num_free(), ne3);
  for (Index k = 0; k < ne3; ++k) response.col(k) = sys.solve_free(dense_b.col(k));

  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(2 * nb, ne3);
  for (Index j = 0; j < nb; ++j) {
    const Index from = loop[static_cast<std::size_t>(j)];
    const Index to = loop[static_cast<std::size_t>((j + 1) % nb)];
    for (int c = 0; c < 2; ++c) {
      const Index fi = sys.reduction.free_index(2 * to + c);
      const Index fo = sys.reduction.free_index(2 * from + c);
      if (fi >= 0) stacked.row(2 * j + c) += response.row(fi);
      if (fo >= 0) stacked.row(2 * j + c) -= response.row(fo);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(stacked);
  const Eigen::MatrixXd kernel = lu.kernel();
  if (kernel_dimension) *kernel_dimension = lu.dimensionOfKernel();
  if (lu.dimensionOfKernel() == 0) throw NumericalError("edge operator has a trivial kernel");
  Vector k = kernel.col(0);
  return k / k.norm();
}

ConvexityReport convexity_probe(const AssembledSystem& sys, int trials, std::uint64_t seed,
                                double growth_scale) {
  const Objective perimeter(ObjectiveKind::perimeter);
  const Index ne = sys.num_elements();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-growth_scale, growth_scale);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto random_field = [&] {
    GrowthField g(ne);
    for (Index i = 0; i < 3 * ne; ++i) g.values()[i] = coef(rng);
    return g;
  };
  auto p_of = [&](const Vector& v) { return perimeter.reduced_value(sys, GrowthField(v)); };

  ConvexityReport report;
  report.trials = trials;
  for (int k = 0; k < trials; ++k) {
    const GrowthField g1 = random_field();
    const GrowthField g2 = random_field();
    const double t = unit(rng);
    const double p1 = p_of(g1.values());
    const double p2 = p_of(g2.values());
    const double mid = p_of(t * g1.values() + (1.0 - t) * g2.values());
    const double excess = mid - (t * p1 + (1.0 - t) * p2);
    report.max_violation = std::max(report.max_violation, excess);
    if (excess > 1e-10) ++report.violations;
    if (k == 0) {
      report.endpoint_error = std::max(std::abs(p_of(1.0 * g1.values() + 0.0 * g2.values()) - p1),
                                       std::abs(p_of(0.0 * g1.values() + 1.0 * g2.values()) - p2));
    }
  }

  const Vector dir = perimeter_kernel_direction(sys, &report.kernel_dimension);
  const Vector base = random_field().values();
  const double p0 = p_of(base);
  report.kernel_slope = p_of(base + dir) - p0;
  for (int i = 1; i <= 10; ++i) {
    const double s = 0.1 * i;
    report.kernel_affine_error =
        std::max(report.kernel_affine_error, std::abs(p_of(base + s * dir) - p0 - s * report.kernel_slope));
  }
  report.passed = report.violations == 0 && report.endpoint_error == 0.0 &&
                  report.kernel_dimension > 0 && report.kernel_affine_error <= 1e-8;
  return report;
}

}  // namespace optgrowth
