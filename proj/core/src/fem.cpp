#include "optgrowth/fem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace optgrowth {

void ElasticLaw::validate() const {
  if (!(young_modulus > 0.0)) throw ValidationError("material.E must be positive");
  if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5)) {
    throw ValidationError("material.nu must lie in (-1, 0.5)");
  }
}

Eigen::Matrix3d ElasticLaw::matrix() const {
  const double nu = poisson_ratio;
  Eigen::Matrix3d c;
  c << 1.0, nu, 0.0,
       nu, 1.0, 0.0,
       0.0, 0.0, 0.5 * (1.0 - nu);
  return young_modulus / (1.0 - nu * nu) * c;
}

DofReduction DofReduction::from_mesh(const TriMesh& mesh) {
  const Index n_full = 2 * mesh.num_nodes();
  std::vector<bool> fixed(static_cast<std::size_t>(n_full), false);
  for (Index v : mesh.dirichlet_nodes) {
    if (v < 0 || v >= mesh.num_nodes()) throw ValidationError("Dirichlet node out of range");
    fixed[static_cast<std::size_t>(2 * v)] = true;
    fixed[static_cast<std::size_t>(2 * v + 1)] = true;
  }
  for (const auto& pin : mesh.pinned_dofs) {
    if (pin.node < 0 || pin.node >= mesh.num_nodes() || pin.component < 0 || pin.component > 1) {
      throw ValidationError("pinned DOF out of range");
    }
    fixed[static_cast<std::size_t>(2 * pin.node + pin.component)] = true;
  }
  DofReduction r;
  r.full_to_free_.assign(static_cast<std::size_t>(n_full), -1);
  for (Index d = 0; d < n_full; ++d) {
    if (!fixed[static_cast<std::size_t>(d)]) {
      r.full_to_free_[static_cast<std::size_t>(d)] = static_cast<Index>(r.free_.size());
      r.free_.push_back(d);
    }
  }
  if (r.free_.empty()) throw ValidationError("every displacement DOF is constrained");
  return r;
}

Vector DofReduction::expand(const Vector& free_values) const {
  Vector full = Vector::Zero(num_full());
  for (Index i = 0; i < num_free(); ++i) full[free_[static_cast<std::size_t>(i)]] = free_values[i];
  return full;
}

Vector DofReduction::restrict_to_free(const Vector& full_values) const {
  Vector r(num_free());
  for (Index i = 0; i < num_free(); ++i) r[i] = full_values[free_[static_cast<std::size_t>(i)]];
  return r;
}

EquilibriumSolver::EquilibriumSolver(const SparseMatrix& stiffness) {
  ldlt_.compute(stiffness);
  if (ldlt_.info() != Eigen::Success) {
    throw NumericalError("stiffness factorization failed");
  }
  min_pivot_ = ldlt_.vectorD().minCoeff();
  if (!(min_pivot_ > 0.0)) {
    throw NumericalError("stiffness matrix is not positive definite; constraints leave a rigid mode");
  }
}

Vector EquilibriumSolver::solve(const Vector& rhs) const { return ldlt_.solve(rhs); }

Eigen::Matrix<double, 3, 6> strain_operator(const ElementGeometry& g) {
  Eigen::Matrix<double, 3, 6> d = Eigen::Matrix<double, 3, 6>::Zero();
  for (int i = 0; i < 3; ++i) {
    const double dx = g.hat_gradients(i, 0);
    const double dy = g.hat_gradients(i, 1);
    d(0, 2 * i) = dx;
    d(1, 2 * i + 1) = dy;
    d(2, 2 * i) = dy;
    d(2, 2 * i + 1) = dx;
  }
  return d;
}

AssembledSystem assemble(const TriMesh& mesh, const ElasticLaw& law, const SurfaceLoad& load,
                         const DofReduction& reduction) {
  law.validate();
  if (reduction.num_full() != 2 * mesh.num_nodes()) {
    throw ValidationError("assemble: DOF reduction does not match mesh");
  }
  AssembledSystem sys;
  sys.mesh = std::make_shared<const TriMesh>(mesh);
  sys.law = law;
  sys.elasticity = law.matrix();
  sys.reduction = reduction;

  const Index ne = mesh.num_elements();
  const Index nf = reduction.num_free();
  sys.geometry.reserve(static_cast<std::size_t>(ne));
  sys.element_areas.resize(ne);
  sys.penalty_diag.resize(3 * ne);
  sys.trace_weights = Vector::Zero(3 * ne);

  std::vector<Eigen::Triplet<double>> k_trip, b_trip, a_trip;
  k_trip.reserve(static_cast<std::size_t>(36 * ne));
  b_trip.reserve(static_cast<std::size_t>(18 * ne));
  a_trip.reserve(static_cast<std::size_t>(2 * ne));

  const Eigen::Matrix3d& c = sys.elasticity;
  for (Index e = 0; e < ne; ++e) {
    const ElementGeometry g = element_geometry(mesh, e);
    sys.geometry.push_back(g);
    const auto d = strain_operator(g);
    const Eigen::Matrix<double, 6, 6> ke = g.area * d.transpose() * c * d;
    const Eigen::Matrix<double, 6, 3> be = g.area * d.transpose() * c;

    const auto& tri = mesh.triangle(e);
    Index dofs[6];
    for (int i = 0; i < 3; ++i) {
      dofs[2 * i] = reduction.free_index(2 * tri[i]);
      dofs[2 * i + 1] = reduction.free_index(2 * tri[i] + 1);
    }
    for (int r = 0; r < 6; ++r) {
      if (dofs[r] < 0) continue;
      for (int s = 0; s < 6; ++s) {
        if (dofs[s] >= 0) k_trip.emplace_back(dofs[r], dofs[s], ke(r, s));
      }
      for (int s = 0; s < 3; ++s) b_trip.emplace_back(dofs[r], 3 * e + s, be(r, s));
    }

    sys.element_areas[e] = g.area;
    sys.penalty_diag.segment<3>(3 * e).setConstant(2.0 * g.area);
    sys.trace_weights[3 * e] = g.area;
    sys.trace_weights[3 * e + 1] = g.area;
    a_trip.emplace_back(e, 3 * e, 1.0);
    a_trip.emplace_back(e, 3 * e + 1, 1.0);
  }
  sys.domain_area = sys.element_areas.sum();

  sys.stiffness.resize(nf, nf);
  sys.stiffness.setFromTriplets(k_trip.begin(), k_trip.end());
  sys.coupling.resize(nf, 3 * ne);
  sys.coupling.setFromTriplets(b_trip.begin(), b_trip.end());
  sys.trace_op.resize(ne, 3 * ne);
  sys.trace_op.setFromTriplets(a_trip.begin(), a_trip.end());

  // Consistent edge loads: a constant traction on an affine edge splits
  // half of p * |edge| onto each endpoint.
  Vector f_full = Vector::Zero(2 * mesh.num_nodes());
  for (const auto& edge : mesh.neumann_edges) {
    if (!edge.loaded) continue;
    const double len = (mesh.node(edge.b) - mesh.node(edge.a)).norm();
    for (Index v : {edge.a, edge.b}) {
      f_full[2 * v] += 0.5 * len * load.traction.x();
      f_full[2 * v + 1] += 0.5 * len * load.traction.y();
    }
  }
  sys.load = reduction.restrict_to_free(f_full);

  sys.solver = std::make_shared<const EquilibriumSolver>(sys.stiffness);
  return sys;
}

Vector solve_equilibrium(const AssembledSystem& sys, const GrowthField& growth, const Vector& load) {
  if (growth.num_elements() != sys.num_elements()) {
    throw ValidationError("solve_equilibrium: growth field has " +
                          std::to_string(growth.num_elements()) + " elements, mesh has " +
                          std::to_string(sys.num_elements()));
  }
  const Vector rhs = sys.coupling * growth.values() + load;
  const Vector u = sys.solve_free(rhs);
  const double scale = (sys.coupling * growth.values()).norm() + load.norm();
  const double res = (sys.stiffness * u - rhs).norm();
  if (!std::isfinite(res) || res > 1e-10 * scale) {
    throw NumericalError("equilibrium residual " + std::to_string(res) + " exceeds tolerance");
  }
  return sys.reduction.expand(u);
}

Vector solve_equilibrium(const AssembledSystem& sys, const GrowthField& growth) {
  return solve_equilibrium(sys, growth, sys.load);
}

GrowthField element_strains(const AssembledSystem& sys, const Vector& displacement) {
  const auto& mesh = *sys.mesh;
  GrowthField strain(mesh.num_elements());
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    const auto& tri = mesh.triangle(e);
    Eigen::Matrix<double, 6, 1> ue;
    for (int i = 0; i < 3; ++i) {
      ue[2 * i] = displacement[2 * tri[i]];
      ue[2 * i + 1] = displacement[2 * tri[i] + 1];
    }
    strain.set_element(e, strain_operator(sys.geometry[static_cast<std::size_t>(e)]) * ue);
  }
  return strain;
}

}  // namespace optgrowth
