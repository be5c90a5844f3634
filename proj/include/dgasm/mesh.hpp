#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

namespace dgasm {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Triangulation with counterclockwise vertex order. `level` and `h` are 0
/// for meshes that were not produced by build_structured_mesh.
struct TriMesh {
  int level = 0;
  double h = 0.0;
  std::vector<Point> vertices;
  std::vector<std::array<std::size_t, 3>> triangles;

  std::size_t num_triangles() const noexcept { return triangles.size(); }
  std::array<Point, 3> corners(std::size_t t) const;
  double signed_area(std::size_t t) const;
  Point barycenter(std::size_t t) const;
};

/// Which neighbour of an interior edge plays the K+ role (the side the
/// normal points away from).
enum class SideConvention { lower_index_plus, higher_index_plus };

struct Edge {
  std::array<std::size_t, 2> vertices;  // ordered counterclockwise with respect to `plus`
  double length = 0.0;
  Point normal;  // unit, from plus to minus (outward on the boundary)
  std::size_t plus = 0;
  std::optional<std::size_t> minus;

  bool is_boundary() const noexcept { return !minus.has_value(); }
};

struct EdgeSkeleton {
  std::vector<Edge> edges;

  std::size_t num_boundary() const;
  std::size_t num_interior() const { return edges.size() - num_boundary(); }
};

/// Uniform mesh of [0,1]^2: 2^level squares per side, each cut by the
/// lower-left to upper-right diagonal. Vertices are row-major; square (i, j)
/// yields triangles 2(jN+i) (below the diagonal) and 2(jN+i)+1 (above).
TriMesh build_structured_mesh(int level);

EdgeSkeleton build_skeleton(const TriMesh& mesh,
                            SideConvention convention = SideConvention::lower_index_plus);

struct StructuredMesh {
  TriMesh mesh;
  EdgeSkeleton skeleton;
};
StructuredMesh build_structured(int level);

/// parent[t] is the coarse triangle containing fine triangle t.
struct NestingMap {
  int fine_level = 0;
  int coarse_level = 0;
  std::vector<std::size_t> parent;
};

NestingMap build_nesting(const TriMesh& fine, const TriMesh& coarse);

/// Barycentric coordinates of p with respect to triangle t.
std::array<double, 3> barycentric(const TriMesh& mesh, std::size_t t, Point p);

/// Line-oriented dump, see README ("Mesh listing").
void write_mesh_listing(const TriMesh& mesh, std::ostream& out);

}  // namespace dgasm
