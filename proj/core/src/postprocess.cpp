#include "optgrowth/postprocess.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace optgrowth {
namespace {

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_cross(const Point2& p1, const Point2& p2, const Point2& q1, const Point2& q2) {
  const double d1 = cross(p2 - p1, q1 - p1);
  const double d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1);
  const double d4 = cross(q2 - q1, p2 - q1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

std::vector<Point2> reference_polygon(const TriMesh& mesh) {
  std::vector<Point2> poly;
  poly.reserve(mesh.boundary_loop().size());
  for (Index v : mesh.boundary_loop()) poly.push_back(mesh.node(v));
  return poly;
}

}  // namespace

StressField cauchy_stress(const AssembledSystem& sys, const Vector& displacement, const GrowthField& growth) {
  if (growth.num_elements() != sys.num_elements()) throw ValidationError("stress: growth size mismatch");
  const GrowthField strain = element_strains(sys, displacement);
  StressField out;
  out.values.resize(sys.num_elements(), 3);
  for (Index e = 0; e < sys.num_elements(); ++e) {
    out.values.row(e) = (sys.elasticity * (strain.element(e) - growth.element(e))).transpose();
  }
  return out;
}

StressField residual_stress(const AssembledSystem& sys, const GrowthField& growth) {
  const Vector u0 = solve_equilibrium(sys, growth, Vector::Zero(sys.num_free()));
  StressField s = cauchy_stress(sys, u0, growth);
  s.kind = StressKind::residual;
  return s;
}

RadialHoop radial_hoop(const StressField& stress, const TriMesh& mesh, const Point2& center) {
  const Index ne = stress.num_elements();
  if (ne != mesh.num_elements()) throw ValidationError("radial_hoop: stress/mesh size mismatch");
  RadialHoop out;
  out.sigma_rr = Vector::Zero(ne);
  out.sigma_tt = Vector::Zero(ne);
  out.undefined.assign(static_cast<std::size_t>(ne), false);
  for (Index e = 0; e < ne; ++e) {
    const Point2 r = mesh.element_centroid(e) - center;
    const double len = r.norm();
    if (len == 0.0) {
      out.undefined[static_cast<std::size_t>(e)] = true;
      continue;
    }
    const double c = r.x() / len, s = r.y() / len;
    const double t11 = stress.values(e, 0), t22 = stress.values(e, 1), t12 = stress.values(e, 2);
    out.sigma_rr[e] = t11 * c * c + 2.0 * t12 * c * s + t22 * s * s;
    out.sigma_tt[e] = t11 * s * s - 2.0 * t12 * c * s + t22 * c * c;
  }
  return out;
}

ShapeMetrics polygon_metrics(const std::vector<Point2>& polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) throw ValidationError("shape metrics: polygon needs at least 3 vertices");
  ShapeMetrics m;
  double twice_area = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Point2& p = polygon[j];
    const Point2& q = polygon[(j + 1) % n];
    twice_area += cross(p, q);
    m.perimeter += (q - p).norm();
  }
  m.area = 0.5 * twice_area;
  if (!(m.perimeter > 0.0)) throw NumericalError("shape metrics: degenerate boundary");
  m.roundness = 4.0 * std::numbers::pi * m.area / (m.perimeter * m.perimeter);
  for (std::size_t i = 0; i < n && !m.self_intersecting; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
      if (segments_cross(polygon[i], polygon[i + 1], polygon[j], polygon[(j + 1) % n])) {
        m.self_intersecting = true;
        break;
      }
    }
  }
  return m;
}

ShapeMetrics shape_metrics(const Vector& displacement, const TriMesh& mesh) {
  if (displacement.size() != 2 * mesh.num_nodes()) throw ValidationError("shape metrics: displacement size");
  std::vector<Point2> poly;
  poly.reserve(mesh.boundary_loop().size());
  for (Index v : mesh.boundary_loop()) poly.push_back(mesh.node(v) + displacement.segment<2>(2 * v));
  return polygon_metrics(poly);
}

double normalized_radius(const Point2& x, const Point2& center, const std::vector<Point2>& polygon) {
  const Point2 dir = x - center;
  const double r = dir.norm();
  if (r == 0.0) return 0.0;
  const Point2 u = dir / r;
  double hit = std::numeric_limits<double>::infinity();
  const std::size_t n = polygon.size();
  for (std::size_t j = 0; j < n; ++j) {
    const Point2 p = polygon[j] - center;
    const Point2 e = polygon[(j + 1) % n] - polygon[j];
    const double denom = cross(u, e);
    if (denom == 0.0) continue;
    // center + t u = polygon[j] + s e
    const double t = cross(p, e) / denom;
    const double s = cross(p, u) / denom;
    if (t > 0.0 && s >= 0.0 && s <= 1.0) hit = std::min(hit, t);
  }
  if (!std::isfinite(hit)) throw ValidationError("normalized_radius: center is outside the boundary");
  return r / hit;
}

BandMeans band_means(const RadialHoop& rh, const TriMesh& mesh, const Point2& center, double core_fraction,
                     double band_fraction) {
  const auto poly = reference_polygon(mesh);
  BandMeans out;
  double core_w = 0.0, band_w = 0.0;
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    if (rh.undefined[static_cast<std::size_t>(e)]) continue;
    const auto& t = mesh.triangle(e);
    const double w = 0.5 * cross(mesh.node(t[1]) - mesh.node(t[0]), mesh.node(t[2]) - mesh.node(t[0]));
    const double rho = normalized_radius(mesh.element_centroid(e), center, poly);
    if (rho <= core_fraction) {
      out.core_hoop += w * rh.sigma_tt[e];
      core_w += w;
      ++out.core_count;
    }
    if (rho >= 1.0 - band_fraction) {
      out.band_hoop += w * rh.sigma_tt[e];
      out.band_radial += w * rh.sigma_rr[e];
      out.band_abs_hoop += w * std::abs(rh.sigma_tt[e]);
      out.band_abs_radial += w * std::abs(rh.sigma_rr[e]);
      band_w += w;
      ++out.band_count;
    }
  }
  if (core_w > 0.0) out.core_hoop /= core_w;
  if (band_w > 0.0) {
    out.band_hoop /= band_w;
    out.band_radial /= band_w;
    out.band_abs_hoop /= band_w;
    out.band_abs_radial /= band_w;
  }
  return out;
}

}  // namespace optgrowth
