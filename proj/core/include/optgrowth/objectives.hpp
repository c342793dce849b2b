#pragma once

#include <cstdint>

#include "optgrowth/fem.hpp"
#include "optgrowth/growth_field.hpp"

namespace optgrowth {

enum class ObjectiveKind { external_work, perimeter };

// External work f . u and its reduced gradient B^T K^{-1} f, which does not
// depend on the growth state.
double external_work_value(const AssembledSystem& sys, const Vector& displacement);
Vector external_work_reduced_grad(const AssembledSystem& sys);

/// Length of the deformed boundary polygon x + u along the boundary loop.
double perimeter_value(const Vector& displacement, const TriMesh& mesh);
/// Number of boundary edges whose deformed length is zero.
Index count_degenerate_boundary_edges(const Vector& displacement, const TriMesh& mesh);
/// Gradient with respect to the full 2N displacement; nonzero only on
/// boundary DOFs. Throws NumericalError on a zero-length deformed edge.
Vector perimeter_grad_u(const Vector& displacement, const TriMesh& mesh);
/// B^T K^{-1} (dP/du) restricted to free DOFs.
Vector perimeter_reduced_grad(const Vector& displacement, const AssembledSystem& sys);

/// Driving functional Phi(u) and its reduced form Psi(gamma) = Phi(u(gamma)).
class Objective {
 public:
  explicit Objective(ObjectiveKind kind) : kind_(kind) {}
  ObjectiveKind kind() const { return kind_; }

  double value(const AssembledSystem& sys, const Vector& displacement) const;
  Vector grad_u(const AssembledSystem& sys, const Vector& displacement) const;

  double reduced_value(const AssembledSystem& sys, const GrowthField& growth) const;
  /// Gradient of Psi at `growth`. For the perimeter this costs one forward
  /// and one adjoint solve with the shared factorization.
  Vector reduced_gradient(const AssembledSystem& sys, const GrowthField& growth) const;
  /// Gradient of Psi given the equilibrium displacement of `growth`.
  Vector reduced_gradient_at(const AssembledSystem& sys, const Vector& displacement) const;

  /// True when the reduced gradient is independent of the growth state.
  bool has_constant_gradient() const { return kind_ == ObjectiveKind::external_work; }

 private:
  ObjectiveKind kind_;
};

struct ConvexityReport {
  int trials = 0;
  int violations = 0;
  double max_violation = 0.0;     // max of P(mid) - chord, over trials
  double endpoint_error = 0.0;    // |P at t=0,1 minus endpoint values|
  Index kernel_dimension = 0;     // dimension of the edge-operator null space
  double kernel_affine_error = 0.0;
  double kernel_slope = 0.0;
  bool passed = false;
};

/// Null-space direction of the stacked operators (C_{j+1} - C_j) K^{-1} B,
/// along which every deformed boundary edge vector is unchanged. Dense; meant
/// for small meshes.
Vector perimeter_kernel_direction(const AssembledSystem& sys, Index* kernel_dimension = nullptr);

/// Randomized check that the reduced perimeter is convex but not strictly
/// convex. Deterministic for a given seed.
ConvexityReport convexity_probe(const AssembledSystem& sys, int trials, std::uint64_t seed = 7,
                                double growth_scale = 0.05);

}  // namespace optgrowth
