#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "optgrowth/growth_field.hpp"
#include "optgrowth/mesh.hpp"
#include "optgrowth/types.hpp"

namespace optgrowth {

/// Isotropic plane-stress material.
struct ElasticLaw {
  double young_modulus = 1.0;
  double poisson_ratio = 0.0;

  /// Throws ValidationError unless E > 0 and -1 < nu < 0.5.
  void validate() const;
  /// 3x3 matrix acting on (e11, e22, 2 e12); the third output is T12.
  Eigen::Matrix3d matrix() const;
};

/// Maps the 2N nodal displacement DOFs (x, y interleaved) to the free set.
class DofReduction {
 public:
  /// Constrains both components of every Dirichlet node and each pinned
  /// component. Throws ValidationError if nothing remains free.
  static DofReduction from_mesh(const TriMesh& mesh);

  Index num_full() const { return static_cast<Index>(full_to_free_.size()); }
  Index num_free() const { return static_cast<Index>(free_.size()); }
  const std::vector<Index>& free_dofs() const { return free_; }
  /// Free index of a full DOF, or -1 when constrained.
  Index free_index(Index full_dof) const { return full_to_free_[static_cast<std::size_t>(full_dof)]; }
  bool is_constrained(Index full_dof) const { return free_index(full_dof) < 0; }

  /// Zero-filled 2N vector from free values.
  Vector expand(const Vector& free_values) const;
  /// Free entries of a 2N vector.
  Vector restrict_to_free(const Vector& full_values) const;

 private:
  std::vector<Index> free_;
  std::vector<Index> full_to_free_;
};

/// Constant traction applied on every Neumann edge flagged `loaded`.
struct SurfaceLoad {
  Point2 traction = Point2::Zero();
};

/// Sparse symmetric factorization of the reduced stiffness, computed once.
class EquilibriumSolver {
 public:
  explicit EquilibriumSolver(const SparseMatrix& stiffness);
  Vector solve(const Vector& rhs) const;
  double min_pivot() const { return min_pivot_; }

 private:
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  double min_pivot_ = 0.0;
};

/// All discrete operators on a fixed mesh after Dirichlet reduction.
struct AssembledSystem {
  std::shared_ptr<const TriMesh> mesh;
  ElasticLaw law;
  Eigen::Matrix3d elasticity;   // C
  DofReduction reduction;
  std::vector<ElementGeometry> geometry;

  SparseMatrix stiffness;  // K, free x free
  SparseMatrix coupling;   // B, free x 3N_e
  Vector load;             // f, free
  Vector penalty_diag;     // diagonal of L, 2|T_e| on all three slots
  Vector trace_weights;    // a = sum_e |T_e| A^T e_e
  SparseMatrix trace_op;   // A, N_e x 3N_e
  Vector element_areas;
  double domain_area = 0.0;

  std::shared_ptr<const EquilibriumSolver> solver;

  Index num_elements() const { return element_areas.size(); }
  Index num_free() const { return reduction.num_free(); }

  /// K^{-1} rhs on the free DOFs.
  Vector solve_free(const Vector& rhs) const { return solver->solve(rhs); }
};

AssembledSystem assemble(const TriMesh& mesh, const ElasticLaw& law, const SurfaceLoad& load,
                         const DofReduction& reduction);
inline AssembledSystem assemble(const TriMesh& mesh, const ElasticLaw& law, const SurfaceLoad& load) {
  return assemble(mesh, law, load, DofReduction::from_mesh(mesh));
}

/// Element strain-displacement matrix D (3x6) for local DOFs (u1x, u1y, ..., u3y).
Eigen::Matrix<double, 3, 6> strain_operator(const ElementGeometry& g);

/// Solves K u = B gamma + f; returns the full 2N displacement with zeros on
/// constrained DOFs. Throws NumericalError when the residual check fails.
Vector solve_equilibrium(const AssembledSystem& sys, const GrowthField& growth);
/// Same, with an explicit load vector replacing f (e.g. zero for residual stress).
Vector solve_equilibrium(const AssembledSystem& sys, const GrowthField& growth, const Vector& load);

/// Elementwise strain of a full displacement, vectorized as (e11, e22, 2 e12).
GrowthField element_strains(const AssembledSystem& sys, const Vector& displacement);

}  // namespace optgrowth
