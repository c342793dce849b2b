#pragma once

#include <vector>

#include "optgrowth/fem.hpp"
#include "optgrowth/growth_field.hpp"
#include "optgrowth/mesh.hpp"

namespace optgrowth {

enum class StressKind { loaded, residual };

/// Element stresses (T11, T22, T12), one per triangle.
struct StressField {
  StressKind kind = StressKind::loaded;
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> values;
  Index num_elements() const { return values.rows(); }
};

/// C (E(u) - gamma) per element.
StressField cauchy_stress(const AssembledSystem& sys, const Vector& displacement, const GrowthField& growth);
/// Stress of the zero-load equilibrium with the same growth.
StressField residual_stress(const AssembledSystem& sys, const GrowthField& growth);

struct RadialHoop {
  Vector sigma_rr;
  Vector sigma_tt;
  /// Elements whose centroid coincides with the center (frame undefined;
  /// their values are set to zero).
  std::vector<bool> undefined;
};

RadialHoop radial_hoop(const StressField& stress, const TriMesh& mesh, const Point2& center);

struct ShapeMetrics {
  double area = 0.0;
  double perimeter = 0.0;
  double roundness = 0.0;  // 4 pi A / P^2
  bool self_intersecting = false;
};

/// Metrics of the deformed boundary polygon x + u.
ShapeMetrics shape_metrics(const Vector& displacement, const TriMesh& mesh);
/// Same for an explicit closed polygon.
ShapeMetrics polygon_metrics(const std::vector<Point2>& polygon);

struct BandMeans {
  double core_hoop = 0.0;
  double band_hoop = 0.0;
  double band_radial = 0.0;
  double band_abs_radial = 0.0;
  double band_abs_hoop = 0.0;
  Index core_count = 0;
  Index band_count = 0;
};

/// Normalized radius of a point: |x - c| / R, with R the distance from c to
/// the boundary polygon along the ray through x. 1 on the boundary.
double normalized_radius(const Point2& x, const Point2& center, const std::vector<Point2>& polygon);

/// Area-weighted means over the core (normalized centroid radius at most
/// core_fraction) and the outer band (normalized radius at least
/// 1 - band_fraction). On a disk this is the plain radius over r_max.
BandMeans band_means(const RadialHoop& rh, const TriMesh& mesh, const Point2& center,
                     double core_fraction = 0.5, double band_fraction = 0.15);

}  // namespace optgrowth
