#include "optgrowth/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace optgrowth {
namespace {

constexpr double kDegenerateAreaFraction = 1e-14;

double signed_area(const Point2& p0, const Point2& p1, const Point2& p2) {
  return 0.5 * ((p1.x() - p0.x()) * (p2.y() - p0.y()) -
                (p2.x() - p0.x()) * (p1.y() - p0.y()));
}

struct EdgeKey {
  Index a;
  Index b;
  bool operator==(const EdgeKey&) const = default;
};

struct EdgeKeyHash {
  std::size_t operator()(const EdgeKey& k) const noexcept {
    return std::hash<Index>{}(k.a) * 1000003u ^ std::hash<Index>{}(k.b);
  }
};

}  // namespace

TriMesh::TriMesh(std::vector<Point2> nodes, std::vector<Triangle> triangles,
                 std::vector<Index> loop)
    : nodes_(std::move(nodes)), triangles_(std::move(triangles)) {
  if (nodes_.empty() || triangles_.empty()) {
    throw ValidationError("mesh: empty node or triangle list");
  }
  const auto n = static_cast<Index>(nodes_.size());
  for (const auto& p : nodes_) {
    if (!p.allFinite()) throw ValidationError("mesh: non-finite node coordinate");
  }
  double area = 0.0;
  for (std::size_t e = 0; e < triangles_.size(); ++e) {
    for (Index v : triangles_[e]) {
      if (v < 0 || v >= n) {
        throw ValidationError("mesh: triangle " + std::to_string(e) + " references node " +
                              std::to_string(v) + " out of range");
      }
    }
    const auto& t = triangles_[e];
    const double a = signed_area(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]);
    if (!(a > 0.0)) {
      throw ValidationError("mesh: triangle " + std::to_string(e) +
                            " is not counterclockwise or is degenerate");
    }
    area += a;
  }
  domain_area_ = area;
  for (std::size_t e = 0; e < triangles_.size(); ++e) {
    const auto& t = triangles_[e];
    if (signed_area(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]) <
        kDegenerateAreaFraction * domain_area_) {
      throw ValidationError("mesh: triangle " + std::to_string(e) + " is degenerate");
    }
  }

  // Conformity: every undirected edge belongs to at most two triangles, with
  // opposite orientations.
  std::unordered_map<EdgeKey, int, EdgeKeyHash> directed;
  directed.reserve(triangles_.size() * 3);
  for (const auto& t : triangles_) {
    for (int k = 0; k < 3; ++k) {
      EdgeKey key{t[k], t[(k + 1) % 3]};
      if (++directed[key] > 1) {
        throw ValidationError("mesh: edge (" + std::to_string(key.a) + "," +
                              std::to_string(key.b) + ") used twice with the same orientation");
      }
    }
  }

  const auto computed = optgrowth::boundary_loop(nodes_, triangles_);
  if (loop.empty()) {
    boundary_loop_ = computed;
  } else {
    if (loop.size() != computed.size()) {
      throw ValidationError("mesh: boundary loop has " + std::to_string(loop.size()) +
                            " entries, expected " + std::to_string(computed.size()));
    }
    std::unordered_set<Index> seen;
    for (std::size_t j = 0; j < loop.size(); ++j) {
      const Index a = loop[j];
      const Index b = loop[(j + 1) % loop.size()];
      if (a < 0 || a >= n || !seen.insert(a).second) {
        throw ValidationError("mesh: boundary loop repeats or misses a node");
      }
      if (!directed.contains({a, b}) && !directed.contains({b, a})) {
        throw ValidationError("mesh: boundary loop nodes " + std::to_string(a) + " and " +
                              std::to_string(b) + " do not share an element edge");
      }
    }
    boundary_loop_ = std::move(loop);
  }
}

Point2 TriMesh::element_centroid(Index e) const {
  const auto& t = triangle(e);
  return (node(t[0]) + node(t[1]) + node(t[2])) / 3.0;
}

Point2 TriMesh::area_centroid() const {
  Point2 c = Point2::Zero();
  for (Index e = 0; e < num_elements(); ++e) {
    const auto& t = triangle(e);
    c += signed_area(node(t[0]), node(t[1]), node(t[2])) * element_centroid(e);
  }
  return c / domain_area_;
}

std::vector<Index> boundary_loop(const std::vector<Point2>& nodes,
                                 const std::vector<Triangle>& triangles) {
  std::unordered_set<EdgeKey, EdgeKeyHash> directed;
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) directed.insert({t[k], t[(k + 1) % 3]});
  }
  // With counterclockwise triangles, boundary edges are the directed edges
  // whose reverse is absent; they already run counterclockwise around Omega.
  std::unordered_map<Index, Index> next;
  for (const auto& e : directed) {
    if (directed.contains({e.b, e.a})) continue;
    if (!next.emplace(e.a, e.b).second) {
      throw ValidationError("mesh: boundary is not manifold at node " + std::to_string(e.a));
    }
  }
  if (next.empty()) throw ValidationError("mesh: no boundary edges");

  Index start = next.begin()->first;
  for (const auto& [a, b] : next) {
    const auto& p = nodes[static_cast<std::size_t>(a)];
    const auto& q = nodes[static_cast<std::size_t>(start)];
    if (p.x() < q.x() || (p.x() == q.x() && p.y() < q.y())) start = a;
  }

  std::vector<Index> loop;
  loop.reserve(next.size());
  Index cur = start;
  do {
    loop.push_back(cur);
    auto it = next.find(cur);
    if (it == next.end()) throw ValidationError("mesh: open boundary chain");
    cur = it->second;
    if (loop.size() > next.size()) throw ValidationError("mesh: boundary chain does not close");
  } while (cur != start);

  if (loop.size() != next.size()) {
    throw ValidationError("mesh: disconnected boundary (" + std::to_string(next.size()) +
                          " boundary nodes, loop visits " + std::to_string(loop.size()) + ")");
  }
  return loop;
}

TriMesh generate_rect_mesh(double length, double height, double target_h, MeshPattern pattern) {
  if (!(length > 0.0) || !(height > 0.0) || !(target_h > 0.0)) {
    throw ValidationError("generate_rect_mesh: length, height and target_h must be positive");
  }
  // Cells are as close to square as the divisions allow. The right-diagonal
  // element diameter is the cell diagonal; the crossed pattern splits each
  // cell into four triangles whose diameter is the longer cell side.
  const double cell = pattern == MeshPattern::right_diagonal ? target_h / std::sqrt(2.0) : target_h;
  const auto nx = static_cast<Index>(std::ceil(length / cell - 1e-12));
  const auto ny = static_cast<Index>(std::ceil(height / cell - 1e-12));
  const double hx = length / static_cast<double>(nx);
  const double hy = height / static_cast<double>(ny);

  std::vector<Point2> nodes;
  nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1) + (pattern == MeshPattern::crossed ? nx * ny : 0)));
  for (Index j = 0; j <= ny; ++j) {
    for (Index i = 0; i <= nx; ++i) {
      // Pin the outer rows/columns to the exact extents.
      const double x = i == nx ? length : static_cast<double>(i) * hx;
      const double y = j == ny ? height : static_cast<double>(j) * hy;
      nodes.emplace_back(x, y);
    }
  }
  auto id = [nx](Index i, Index j) { return j * (nx + 1) + i; };

  std::vector<Triangle> tris;
  for (Index j = 0; j < ny; ++j) {
    for (Index i = 0; i < nx; ++i) {
      const Index n00 = id(i, j), n10 = id(i + 1, j), n01 = id(i, j + 1), n11 = id(i + 1, j + 1);
      if (pattern == MeshPattern::right_diagonal) {
        tris.push_back({n00, n10, n11});
        tris.push_back({n00, n11, n01});
      } else {
        const auto c = static_cast<Index>(nodes.size());
        nodes.emplace_back((static_cast<double>(i) + 0.5) * hx, (static_cast<double>(j) + 0.5) * hy);
        tris.push_back({n00, n10, c});
        tris.push_back({n10, n11, c});
        tris.push_back({n11, n01, c});
        tris.push_back({n01, n00, c});
      }
    }
  }
  return TriMesh(std::move(nodes), std::move(tris));
}

ElementGeometry element_geometry(const TriMesh& mesh, Index e) {
  if (e < 0 || e >= mesh.num_elements()) {
    throw ValidationError("element_geometry: element index " + std::to_string(e) + " out of range");
  }
  const auto& t = mesh.triangle(e);
  const Point2& p1 = mesh.node(t[0]);
  const Point2& p2 = mesh.node(t[1]);
  const Point2& p3 = mesh.node(t[2]);
  const double area = signed_area(p1, p2, p3);
  if (area < kDegenerateAreaFraction * mesh.domain_area()) {
    throw ValidationError("element_geometry: degenerate element " + std::to_string(e));
  }
  ElementGeometry g;
  g.area = area;
  const double s = 1.0 / (2.0 * area);
  g.hat_gradients << (p2.y() - p3.y()) * s, (p3.x() - p2.x()) * s,
                     (p3.y() - p1.y()) * s, (p1.x() - p3.x()) * s,
                     (p1.y() - p2.y()) * s, (p2.x() - p1.x()) * s;
  return g;
}

void write_mesh(std::ostream& os, const TriMesh& mesh) {
  const auto old_prec = os.precision(17);
  os << mesh.num_nodes() << ' ' << mesh.num_elements() << ' ' << mesh.num_boundary_nodes() << '\n';
  for (const auto& p : mesh.nodes()) os << p.x() << ' ' << p.y() << '\n';
  for (const auto& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  const auto& loop = mesh.boundary_loop();
  for (std::size_t j = 0; j < loop.size(); ++j) os << (j ? " " : "") << loop[j];
  os << '\n';
  os.precision(old_prec);
}

TriMesh read_mesh(std::istream& is) {
  Index n = 0, ne = 0, nb = 0;
  if (!(is >> n >> ne >> nb) || n <= 0 || ne <= 0 || nb < 3) {
    throw ValidationError("read_mesh: bad header");
  }
  std::vector<Point2> nodes(static_cast<std::size_t>(n));
  for (auto& p : nodes) {
    if (!(is >> p.x() >> p.y())) throw ValidationError("read_mesh: truncated node list");
  }
  std::vector<Triangle> tris(static_cast<std::size_t>(ne));
  for (auto& t : tris) {
    if (!(is >> t[0] >> t[1] >> t[2])) throw ValidationError("read_mesh: truncated triangle list");
  }
  std::vector<Index> loop(static_cast<std::size_t>(nb));
  for (auto& b : loop) {
    if (!(is >> b)) throw ValidationError("read_mesh: truncated boundary loop");
  }
  return TriMesh(std::move(nodes), std::move(tris), std::move(loop));
}

void write_mesh_file(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_mesh(os, mesh);
  if (!os) throw Error("failed writing " + path.string());
}

TriMesh read_mesh_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open mesh file " + path.string());
  return read_mesh(is);
}

}  // namespace optgrowth
