#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "optgrowth/types.hpp"

namespace optgrowth {

using Point2 = Eigen::Vector2d;
using Triangle = std::array<Index, 3>;

/// Boundary edge (a, b) oriented along the counterclockwise boundary loop.
struct BoundaryEdge {
  Index a = 0;
  Index b = 0;
  bool loaded = false;  // carries the prescribed surface traction
};

/// A single displacement component fixed to zero (isostatic support).
struct PinnedDof {
  Index node = 0;
  int component = 0;  // 0 = x, 1 = y
};

/// Conforming triangulation of a polygonal domain.
///
/// Triangles are stored counterclockwise. The boundary loop is the cyclic list
/// of boundary nodes such that consecutive entries share an element edge;
/// the closing edge (last -> first) is implicit.
class TriMesh {
 public:
  TriMesh() = default;

  /// Builds and validates the mesh; computes the boundary loop from topology
  /// when `boundary_loop` is empty.
  TriMesh(std::vector<Point2> nodes, std::vector<Triangle> triangles,
          std::vector<Index> boundary_loop = {});

  Index num_nodes() const { return static_cast<Index>(nodes_.size()); }
  Index num_elements() const { return static_cast<Index>(triangles_.size()); }
  Index num_boundary_nodes() const { return static_cast<Index>(boundary_loop_.size()); }

  const std::vector<Point2>& nodes() const { return nodes_; }
  const Point2& node(Index i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const Triangle& triangle(Index e) const { return triangles_[static_cast<std::size_t>(e)]; }
  const std::vector<Index>& boundary_loop() const { return boundary_loop_; }

  /// Sum of element areas.
  double domain_area() const { return domain_area_; }
  Point2 element_centroid(Index e) const;
  /// Area-weighted centroid of the domain.
  Point2 area_centroid() const;

  // Boundary-condition tags. Not part of the geometry file format.
  std::vector<Index> dirichlet_nodes;
  std::vector<PinnedDof> pinned_dofs;
  std::vector<BoundaryEdge> neumann_edges;

 private:
  std::vector<Point2> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<Index> boundary_loop_;
  double domain_area_ = 0.0;
};

enum class MeshPattern { right_diagonal, crossed };

/// Structured triangulation of (0, length) x (0, height) whose element
/// diameters do not exceed `target_h`.
TriMesh generate_rect_mesh(double length, double height, double target_h,
                           MeshPattern pattern = MeshPattern::right_diagonal);

/// Ordered counterclockwise boundary traversal starting at the
/// lexicographically smallest boundary node (smallest x, then smallest y).
/// Throws ValidationError when the boundary is not a single closed loop.
std::vector<Index> boundary_loop(const std::vector<Point2>& nodes,
                                 const std::vector<Triangle>& triangles);
inline std::vector<Index> boundary_loop(const TriMesh& mesh) {
  return boundary_loop(mesh.nodes(), mesh.triangles());
}

struct ElementGeometry {
  double area = 0.0;
  /// Row i holds the gradient of the hat function of local vertex i.
  Eigen::Matrix<double, 3, 2> hat_gradients;
};

ElementGeometry element_geometry(const TriMesh& mesh, Index e);

// Plain-text format: "N N_e N_b", N lines "x y", N_e lines "i j k" (0-based),
// then the N_b boundary-loop indices. Doubles are written with 17 significant
// digits so the round trip is exact.
void write_mesh(std::ostream& os, const TriMesh& mesh);
TriMesh read_mesh(std::istream& is);
void write_mesh_file(const std::filesystem::path& path, const TriMesh& mesh);
TriMesh read_mesh_file(const std::filesystem::path& path);

}  // namespace optgrowth
