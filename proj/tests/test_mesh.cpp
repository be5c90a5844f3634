#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "dgasm/errors.hpp"
#include "dgasm/mesh.hpp"

using namespace dgasm;

namespace {

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Edge enumeration straight from the triangle list: key = sorted vertex pair.
std::map<std::pair<std::size_t, std::size_t>, int> enumerate_edges(const TriMesh& m) {
  std::map<std::pair<std::size_t, std::size_t>, int> count;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k) {
      std::size_t a = t[k], b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++count[{a, b}];
    }
  return count;
}

bool on_segment(Point p, Point a, Point b) {
  const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  const double t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) /
                   ((b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y));
  return std::abs(cross) < 1e-12 && t > -1e-12 && t < 1 + 1e-12;
}

}  // namespace

TEST(StructuredMesh, LevelOneCountsMatchEnumeration) {
  const StructuredMesh s = build_structured(1);
  EXPECT_EQ(s.mesh.num_triangles(), 8u);
  const auto count = enumerate_edges(s.mesh);
  std::size_t boundary = 0;
  for (const auto& [key, c] : count) boundary += (c == 1);
  EXPECT_EQ(count.size(), 16u);
  EXPECT_EQ(boundary, 8u);
  EXPECT_EQ(s.skeleton.edges.size(), count.size());
  EXPECT_EQ(s.skeleton.num_boundary(), boundary);
}

TEST(StructuredMesh, LevelOneTotalAreaIsExactlyOne) {
  const TriMesh m = build_structured_mesh(1);
  double area = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) area += m.signed_area(t);
  EXPECT_EQ(area, 1.0);
}

TEST(StructuredMesh, FineLevelSeven) {
  const TriMesh m = build_structured_mesh(7);
  EXPECT_EQ(m.h, 1.0 / 128.0);
  EXPECT_EQ(m.num_triangles(), 2u * 128u * 128u);
}

TEST(StructuredMesh, LevelOutOfRange) {
  EXPECT_THROW(build_structured_mesh(0), InvalidArgument);
  EXPECT_THROW(build_structured_mesh(13), InvalidArgument);
}

class MeshLevels : public ::testing::TestWithParam<int> {};

TEST_P(MeshLevels, TriangleInvariants) {
  const int level = GetParam();
  const TriMesh m = build_structured_mesh(level);
  const std::size_t n = std::size_t{1} << level;
  const double h = std::ldexp(1.0, -level);
  EXPECT_EQ(m.level, level);
  EXPECT_EQ(m.h, h);
  EXPECT_EQ(m.num_triangles(), 2 * n * n);
  ASSERT_EQ(m.vertices.size(), (n + 1) * (n + 1));
  for (std::size_t j = 0; j <= n; ++j)
    for (std::size_t i = 0; i <= n; ++i) {
      const Point p = m.vertices[j * (n + 1) + i];
      EXPECT_EQ(p.x, i * h);
      EXPECT_EQ(p.y, j * h);
    }
  for (std::size_t t = 0; t < m.num_triangles(); ++t)
    EXPECT_NEAR(m.signed_area(t), 0.5 * h * h, 1e-15 * h * h);
}

TEST_P(MeshLevels, SkeletonInvariants) {
  const int level = GetParam();
  const StructuredMesh s = build_structured(level);
  const double h = s.mesh.h;
  double perimeter = 0.0;
  for (const Edge& e : s.skeleton.edges) {
    const Point a = s.mesh.vertices[e.vertices[0]], b = s.mesh.vertices[e.vertices[1]];
    EXPECT_NEAR(std::hypot(e.normal.x, e.normal.y), 1.0, 1e-15);
    EXPECT_NEAR(e.length, dist(a, b), 1e-15);
    EXPECT_TRUE(std::abs(e.length - h) < 1e-15 || std::abs(e.length - h * std::sqrt(2.0)) < 1e-15);
    const Point mid{(a.x + b.x) / 2, (a.y + b.y) / 2};
    const Point cp = s.mesh.barycenter(e.plus);
    // Normal leaves the plus element.
    EXPECT_GT(e.normal.x * (mid.x - cp.x) + e.normal.y * (mid.y - cp.y), 0.0);
    if (e.is_boundary()) {
      perimeter += e.length;
      const bool on_boundary = (a.x == 0 && b.x == 0) || (a.x == 1 && b.x == 1) ||
                               (a.y == 0 && b.y == 0) || (a.y == 1 && b.y == 1);
      EXPECT_TRUE(on_boundary);
    } else {
      const auto& tp = s.mesh.triangles[e.plus];
      const auto& tm = s.mesh.triangles[*e.minus];
      std::set<std::size_t> sp(tp.begin(), tp.end()), sm(tm.begin(), tm.end());
      std::vector<std::size_t> shared;
      for (auto v : sp)
        if (sm.count(v)) shared.push_back(v);
      ASSERT_EQ(shared.size(), 2u);
      EXPECT_EQ(std::set<std::size_t>(shared.begin(), shared.end()),
                (std::set<std::size_t>{e.vertices[0], e.vertices[1]}));
      EXPECT_LT(e.plus, *e.minus);
      const Point cm = s.mesh.barycenter(*e.minus);
      EXPECT_GT(e.normal.x * (cm.x - cp.x) + e.normal.y * (cm.y - cp.y), 0.0);
    }
  }
  EXPECT_NEAR(perimeter, 4.0, 1e-12);
  const std::size_t n = std::size_t{1} << level;
  EXPECT_EQ(s.skeleton.num_boundary(), 4 * n);
  EXPECT_EQ(s.skeleton.edges.size(), 3 * n * n + 2 * n);
}

INSTANTIATE_TEST_SUITE_P(Levels, MeshLevels, ::testing::Values(1, 2, 3, 4, 5));

TEST(Skeleton, OppositeConventionSwapsSides) {
  const TriMesh m = build_structured_mesh(3);
  const EdgeSkeleton lo = build_skeleton(m, SideConvention::lower_index_plus);
  const EdgeSkeleton hi = build_skeleton(m, SideConvention::higher_index_plus);
  ASSERT_EQ(lo.edges.size(), hi.edges.size());
  for (std::size_t k = 0; k < lo.edges.size(); ++k) {
    const Edge& a = lo.edges[k];
    const Edge& b = hi.edges[k];
    if (a.is_boundary()) {
      EXPECT_EQ(a.plus, b.plus);
      EXPECT_EQ(a.normal.x, b.normal.x);
      EXPECT_EQ(a.normal.y, b.normal.y);
    } else {
      EXPECT_EQ(a.plus, *b.minus);
      EXPECT_EQ(*a.minus, b.plus);
      EXPECT_EQ(a.normal.x, -b.normal.x);
      EXPECT_EQ(a.normal.y, -b.normal.y);
      EXPECT_GT(b.plus, *b.minus);
    }
  }
}

TEST(Nesting, OneLevelGivesFourChildren) {
  const TriMesh coarse = build_structured_mesh(3), fine = build_structured_mesh(4);
  const NestingMap map = build_nesting(fine, coarse);
  std::vector<int> children(coarse.num_triangles(), 0);
  for (auto p : map.parent) ++children[p];
  for (int c : children) EXPECT_EQ(c, 4);
}

TEST(Nesting, TwoLevelsGiveSixteenChildren) {
  const TriMesh coarse = build_structured_mesh(5), fine = build_structured_mesh(7);
  const NestingMap map = build_nesting(fine, coarse);
  EXPECT_EQ(map.fine_level, 7);
  EXPECT_EQ(map.coarse_level, 5);
  std::vector<int> children(coarse.num_triangles(), 0);
  for (auto p : map.parent) ++children[p];
  for (int c : children) EXPECT_EQ(c, 16);
}

TEST(Nesting, BarycentersLieInParents) {
  const TriMesh coarse = build_structured_mesh(2), fine = build_structured_mesh(5);
  const NestingMap map = build_nesting(fine, coarse);
  for (std::size_t t = 0; t < fine.num_triangles(); ++t) {
    // Every corner of the fine triangle lies in the closure of its parent.
    for (const Point& p : fine.corners(t))
      for (double l : barycentric(coarse, map.parent[t], p)) EXPECT_GE(l, -1e-12);
  }
}

TEST(Nesting, RejectsNonNestedLevels) {
  const TriMesh a = build_structured_mesh(3), b = build_structured_mesh(3);
  EXPECT_THROW(build_nesting(a, b), InvalidArgument);
  EXPECT_THROW(build_nesting(build_structured_mesh(2), a), InvalidArgument);
}

TEST(Nesting, CoarseEdgesAreUnionsOfFineEdges) {
  const StructuredMesh coarse = build_structured(2), fine = build_structured(4);
  for (const Edge& ce : coarse.skeleton.edges) {
    const Point a = coarse.mesh.vertices[ce.vertices[0]], b = coarse.mesh.vertices[ce.vertices[1]];
    int pieces = 0;
    double length = 0.0;
    for (const Edge& fe : fine.skeleton.edges) {
      const Point p = fine.mesh.vertices[fe.vertices[0]], q = fine.mesh.vertices[fe.vertices[1]];
      if (on_segment(p, a, b) && on_segment(q, a, b)) {
        ++pieces;
        length += fe.length;
      }
    }
    EXPECT_EQ(pieces, 4);
    EXPECT_NEAR(length, ce.length, 1e-14);
  }
}

TEST(MeshListing, SectionsAndCounts) {
  const TriMesh m = build_structured_mesh(1);
  std::ostringstream out;
  write_mesh_listing(m, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# level 1", 0), 0u);
  std::getline(in, line);
  EXPECT_EQ(line, "vertices 9");
  for (int i = 0; i < 9; ++i) std::getline(in, line);
  EXPECT_EQ(line, "8 1 1");
  std::getline(in, line);
  EXPECT_EQ(line, "triangles 8");
  std::getline(in, line);
  EXPECT_EQ(line, "0 0 1 4");
}
