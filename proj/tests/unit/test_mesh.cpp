#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "optgrowth/mesh.hpp"
#include "test_support.hpp"

using namespace optgrowth;

namespace {

double loop_signed_area(const TriMesh& m) {
  const auto& loop = m.boundary_loop();
  double a = 0.0;
  for (std::size_t j = 0; j < loop.size(); ++j) {
    const Point2& p = m.node(loop[j]);
    const Point2& q = m.node(loop[(j + 1) % loop.size()]);
    a += 0.5 * (p.x() * q.y() - p.y() * q.x());
  }
  return a;
}

double diameter(const TriMesh& m, Index e) {
  const auto& t = m.triangle(e);
  double d = 0.0;
  for (int i = 0; i < 3; ++i) d = std::max(d, (m.node(t[i]) - m.node(t[(i + 1) % 3])).norm());
  return d;
}

}  // namespace

TEST(Mesh, UnitSquareWithOneDiagonal) {
  const TriMesh m = generate_rect_mesh(1.0, 1.0, std::sqrt(2.0));
  EXPECT_EQ(m.num_nodes(), 4);
  EXPECT_EQ(m.num_elements(), 2);
  for (Index e = 0; e < 2; ++e) EXPECT_NEAR(element_geometry(m, e).area, 0.5, 1e-15);
}

TEST(Mesh, BeamPresetResolutionMatchesTableScale) {
  const TriMesh m = generate_rect_mesh(1.0, 0.1, 0.0285);
  EXPECT_EQ(m.num_nodes(), 306);
  EXPECT_NEAR(static_cast<double>(m.num_elements()), 498.0, 0.05 * 498.0);
  // The coarser spacing still lands on the same order of magnitude.
  const TriMesh coarse = generate_rect_mesh(1.0, 0.1, 0.05);
  EXPECT_GE(coarse.num_elements(), 100);
  EXPECT_LE(coarse.num_elements(), 1000);
}

TEST(Mesh, AreasSumToRectangle) {
  for (double h : {0.3, 0.1, 0.0395, 0.017}) {
    for (auto pattern : {MeshPattern::right_diagonal, MeshPattern::crossed}) {
      const TriMesh m = generate_rect_mesh(1.0, 0.5, h, pattern);
      double sum = 0.0;
      for (Index e = 0; e < m.num_elements(); ++e) sum += element_geometry(m, e).area;
      EXPECT_NEAR(sum, 0.5, 1e-12) << "h=" << h;
      EXPECT_NEAR(m.domain_area(), 0.5, 1e-12);
    }
  }
}

TEST(Mesh, ElementDiametersRespectTarget) {
  for (double h : {0.5, 0.1, 0.0285, 0.013}) {
    for (auto pattern : {MeshPattern::right_diagonal, MeshPattern::crossed}) {
      const TriMesh m = generate_rect_mesh(1.3, 0.7, h, pattern);
      for (Index e = 0; e < m.num_elements(); ++e) EXPECT_LE(diameter(m, e), h * (1 + 1e-12));
    }
  }
}

TEST(Mesh, NonPositiveDimensionsRejected) {
  EXPECT_THROW(generate_rect_mesh(0.0, 1.0, 0.1), ValidationError);
  EXPECT_THROW(generate_rect_mesh(1.0, -1.0, 0.1), ValidationError);
  EXPECT_THROW(generate_rect_mesh(1.0, 1.0, 0.0), ValidationError);
}

TEST(BoundaryLoop, UnitSquareCounterclockwise) {
  const TriMesh m = generate_rect_mesh(1.0, 1.0, std::sqrt(2.0));
  const std::vector<Index> expect = {0, 1, 3, 2};  // (0,0) (1,0) (1,1) (0,1)
  EXPECT_EQ(m.boundary_loop(), expect);
}

TEST(BoundaryLoop, SingleTriangle) {
  const TriMesh m({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
  EXPECT_EQ(m.boundary_loop(), (std::vector<Index>{0, 1, 2}));
}

TEST(BoundaryLoop, LengthEqualsBoundaryNodeCount) {
  for (auto pattern : {MeshPattern::right_diagonal, MeshPattern::crossed}) {
    const TriMesh m = generate_rect_mesh(1.0, 0.5, 0.0395, pattern);
    // Oracle: a node is on the boundary iff the triangles around it do not
    // close a full fan, i.e. it has a directed boundary edge leaving it.
    std::set<std::pair<Index, Index>> directed;
    for (const auto& t : m.triangles()) {
      for (int k = 0; k < 3; ++k) directed.insert({t[k], t[(k + 1) % 3]});
    }
    std::set<Index> boundary;
    for (const auto& [a, b] : directed) {
      if (!directed.count({b, a})) boundary.insert(a);
    }
    EXPECT_EQ(m.boundary_loop().size(), boundary.size());
    EXPECT_EQ(std::set<Index>(m.boundary_loop().begin(), m.boundary_loop().end()), boundary);
  }
}

TEST(BoundaryLoop, ClosesStartsAtOriginAndRunsCounterclockwise) {
  const TriMesh m = generate_rect_mesh(1.0, 0.5, 0.1);
  const auto& loop = m.boundary_loop();
  EXPECT_EQ(m.node(loop.front()), Point2(0.0, 0.0));
  EXPECT_NEAR(loop_signed_area(m), 0.5, 1e-12);
  // Each consecutive pair (including the closing one) is an edge of exactly one triangle.
  for (std::size_t j = 0; j < loop.size(); ++j) {
    const Index a = loop[j], b = loop[(j + 1) % loop.size()];
    int owners = 0;
    for (const auto& t : m.triangles()) {
      const bool has_a = t[0] == a || t[1] == a || t[2] == a;
      const bool has_b = t[0] == b || t[1] == b || t[2] == b;
      owners += has_a && has_b;
    }
    EXPECT_EQ(owners, 1);
  }
}

TEST(BoundaryLoop, DisconnectedBoundaryRejected) {
  std::vector<Point2> nodes = {{0, 0}, {1, 0}, {0, 1}, {5, 5}, {6, 5}, {5, 6}};
  EXPECT_THROW(TriMesh(nodes, {{0, 1, 2}, {3, 4, 5}}), ValidationError);
}

TEST(TriMeshValidation, RejectsBadTriangles) {
  std::vector<Point2> nodes = {{0, 0}, {1, 0}, {0, 1}};
  EXPECT_THROW(TriMesh(nodes, {{0, 2, 1}}), ValidationError);  // clockwise
  EXPECT_THROW(TriMesh(nodes, {{0, 1, 3}}), ValidationError);  // out of range
  std::vector<Point2> flat = {{0, 0}, {1, 0}, {2, 0}};
  EXPECT_THROW(TriMesh(flat, {{0, 1, 2}}), ValidationError);
}

TEST(ElementGeometry, ReferenceTriangle) {
  const TriMesh m({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
  const auto g = element_geometry(m, 0);
  EXPECT_DOUBLE_EQ(g.area, 0.5);
  EXPECT_EQ(g.hat_gradients.row(0), Eigen::RowVector2d(-1, -1));
  EXPECT_EQ(g.hat_gradients.row(1), Eigen::RowVector2d(1, 0));
  EXPECT_EQ(g.hat_gradients.row(2), Eigen::RowVector2d(0, 1));
}

TEST(ElementGeometry, ScaledTriangleHalvesGradients) {
  const TriMesh m({{0, 0}, {2, 0}, {0, 2}}, {{0, 1, 2}});
  const auto g = element_geometry(m, 0);
  EXPECT_DOUBLE_EQ(g.area, 2.0);
  Eigen::Matrix<double, 3, 2> expect;
  expect << -0.5, -0.5, 0.5, 0.0, 0.0, 0.5;
  EXPECT_LE((g.hat_gradients - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ElementGeometry, PartitionOfUnityOnRandomTriangles) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  int checked = 0;
  while (checked < 200) {
    std::vector<Point2> p = {{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
    const double twice = (p[1] - p[0]).x() * (p[2] - p[0]).y() - (p[1] - p[0]).y() * (p[2] - p[0]).x();
    if (std::abs(twice) < 1e-2) continue;
    if (twice < 0) std::swap(p[1], p[2]);
    const TriMesh m(p, {{0, 1, 2}});
    const auto g = element_geometry(m, 0);
    EXPECT_GT(g.area, 0.0);
    EXPECT_LE(g.hat_gradients.colwise().sum().cwiseAbs().maxCoeff(), 1e-13);
    // Each hat function is 1 at its vertex and 0 at the others.
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double val = (j == 0 ? 1.0 : 0.0) + g.hat_gradients.row(j).dot(p[i] - p[0]);
        EXPECT_NEAR(val, i == j ? 1.0 : 0.0, 1e-12);
      }
    }
    ++checked;
  }
}

TEST(ElementGeometry, IndexOutOfRange) {
  const TriMesh m = generate_rect_mesh(1.0, 1.0, 1.0);
  EXPECT_THROW(element_geometry(m, m.num_elements()), ValidationError);
}

TEST(MeshIo, RoundTripIsBitExact) {
  const TriMesh m = generate_rect_mesh(1.0, 0.5, 0.0395, MeshPattern::crossed);
  std::stringstream ss;
  write_mesh(ss, m);
  const TriMesh r = read_mesh(ss);
  EXPECT_EQ(r.nodes(), m.nodes());
  EXPECT_EQ(r.triangles(), m.triangles());
  EXPECT_EQ(r.boundary_loop(), m.boundary_loop());
  std::stringstream again;
  write_mesh(again, r);
  std::stringstream first;
  write_mesh(first, m);
  EXPECT_EQ(again.str(), first.str());
}

TEST(MeshIo, TruncatedInputRejected) {
  std::stringstream ss("4 2 4\n0 0\n1 0\n");
  EXPECT_THROW(read_mesh(ss), ValidationError);
}
