#pragma once

#include <Eigen/Core>

#include "optgrowth/fem.hpp"
#include "optgrowth/growth_field.hpp"
#include "optgrowth/types.hpp"

namespace optgrowth {

enum class BalanceMode { global, local };
enum class BalanceRelation { equality, inequality };

/// Mass supplied per step, either as a volume fraction of the whole domain
/// (global) or as a per-element trace increment (local).
struct MassBalance {
  BalanceMode mode = BalanceMode::global;
  BalanceRelation relation = BalanceRelation::equality;
  double gamma = 0.0;
  /// Local mode only: per-element averaged increments; empty means `gamma`
  /// on every element.
  Vector local_gamma;

  /// Per-element trace targets (local mode).
  Vector element_targets(Index num_elements) const;
  /// Right-hand side of the global balance, gamma * |Omega|.
  double global_target(const AssembledSystem& sys) const { return gamma * sys.domain_area; }
  void validate(Index num_elements) const;
};

/// Weight of the squared engineering shear (2 Eg12)^2 in the increment
/// penalty. `engineering` weights all three vector slots equally (the diagonal L
/// operator); `frobenius` gives the tensor norm |Eg|^2.
enum class ShearWeight { engineering, frobenius };

constexpr double shear_weight_factor(ShearWeight w) { return w == ShearWeight::engineering ? 1.0 : 0.5; }

/// Diagonal of the penalty metric: L with the shear slots scaled by the
/// shear weight factor.
Vector penalty_metric(const AssembledSystem& sys, ShearWeight weight);

/// Smallest eigenvalue of [[g1, g3/2], [g3/2, g2]].
double lambda_min_2x2(const Eigen::Vector3d& g);

/// Entry e is -lambda_min of element e; the accretion constraint is c <= 0.
Vector c_vector(const GrowthField& increment);

/// Largest positive entry of c_vector (0 when every element is accretive).
double max_psd_violation(const GrowthField& increment);

/// Euclidean (Frobenius) projection of one element tensor onto the PSD cone
/// by clamping negative eigenvalues.
Eigen::Vector3d project_psd(const Eigen::Vector3d& g);

/// Projection of one element tensor onto the PSD cone in the vector metric
/// g1^2 + g2^2 + w g3^2. With w = 1/2 this is project_psd.
Eigen::Vector3d project_psd_weighted(const Eigen::Vector3d& g, double shear_factor);

struct FeasibleProjection {
  GrowthField increment;
  /// Multiplier of the mass-balance constraint(s) in the penalty metric:
  /// size 1 (global) or N_e (local). The projected point equals the cone
  /// projection of (z - M^{-1} a * multiplier), resp. with A^T.
  Vector multipliers;
};

/// Projection, in the penalty metric, onto {mass balance} intersected with
/// {every element increment PSD}. The global case is solved through its
/// one-dimensional dual; the local case decouples per element.
FeasibleProjection project_feasible_increment(const GrowthField& increment, const MassBalance& balance,
                                              const AssembledSystem& sys,
                                              ShearWeight weight = ShearWeight::engineering);

/// Reference implementation of the same projection by Dykstra's alternating
/// projections. Throws NumericalError after `max_cycles` without reaching
/// `tolerance` between successive cycles.
GrowthField project_feasible_increment_dykstra(const GrowthField& increment, const MassBalance& balance,
                                               const AssembledSystem& sys,
                                               ShearWeight weight = ShearWeight::engineering,
                                               int max_cycles = 500, double tolerance = 1e-11);

/// Largest absolute (equality) or positive (inequality) mass-balance residual.
double mass_balance_violation(const GrowthField& increment, const MassBalance& balance,
                              const AssembledSystem& sys);

}  // namespace optgrowth
