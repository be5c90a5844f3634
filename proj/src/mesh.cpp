#include "dgasm/mesh.hpp"

#include <cmath>
#include <ostream>
#include <string>
#include <unordered_map>

#include "dgasm/errors.hpp"

namespace dgasm {

std::array<Point, 3> TriMesh::corners(std::size_t t) const {
  const auto& tri = triangles.at(t);
  return {vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]};
}

double TriMesh::signed_area(std::size_t t) const {
  const auto [a, b, c] = corners(t);
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Point TriMesh::barycenter(std::size_t t) const {
  const auto [a, b, c] = corners(t);
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

std::size_t EdgeSkeleton::num_boundary() const {
  std::size_t n = 0;
  for (const auto& e : edges) n += e.is_boundary() ? 1 : 0;
  return n;
}

TriMesh build_structured_mesh(int level) {
  if (level < 1 || level > 12)
    throw InvalidArgument("build_structured_mesh: level " + std::to_string(level) +
                          " outside [1, 12]");
  const std::size_t n = std::size_t{1} << level;
  TriMesh mesh;
  mesh.level = level;
  mesh.h = std::ldexp(1.0, -level);
  mesh.vertices.reserve((n + 1) * (n + 1));
  for (std::size_t j = 0; j <= n; ++j)
    for (std::size_t i = 0; i <= n; ++i)
      mesh.vertices.push_back({static_cast<double>(i) * mesh.h, static_cast<double>(j) * mesh.h});

  mesh.triangles.reserve(2 * n * n);
  const auto vid = [n](std::size_t i, std::size_t j) { return j * (n + 1) + i; };
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      mesh.triangles.push_back({v00, v10, v11});
      mesh.triangles.push_back({v00, v11, v01});
    }
  }
  return mesh;
}

EdgeSkeleton build_skeleton(const TriMesh& mesh, SideConvention convention) {
  EdgeSkeleton sk;
  const std::size_t nv = mesh.vertices.size();
  std::unordered_map<std::size_t, std::size_t> index;
  index.reserve(3 * mesh.num_triangles());

  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const auto a = tri[k], b = tri[(k + 1) % 3];
      const auto key = std::min(a, b) * nv + std::max(a, b);
      auto [it, inserted] = index.try_emplace(key, sk.edges.size());
      if (inserted) {
        Edge e;
        e.vertices = {a, b};
        e.plus = t;
        sk.edges.push_back(e);
      } else {
        auto& e = sk.edges[it->second];
        if (e.minus)
          throw InvalidArgument("build_skeleton: edge shared by more than two triangles");
        e.minus = t;
      }
    }
  }

  for (auto& e : sk.edges) {
    if (convention == SideConvention::higher_index_plus && e.minus) {
      std::swap(e.plus, *e.minus);
      std::swap(e.vertices[0], e.vertices[1]);
    }
    const Point a = mesh.vertices[e.vertices[0]];
    const Point b = mesh.vertices[e.vertices[1]];
    const double dx = b.x - a.x, dy = b.y - a.y;
    e.length = std::hypot(dx, dy);
    e.normal = {dy / e.length, -dx / e.length};
  }
  return sk;
}

StructuredMesh build_structured(int level) {
  StructuredMesh out{build_structured_mesh(level), {}};
  out.skeleton = build_skeleton(out.mesh);
  return out;
}

std::array<double, 3> barycentric(const TriMesh& mesh, std::size_t t, Point p) {
  const auto [a, b, c] = mesh.corners(t);
  const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  const double l1 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
  const double l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
  return {1.0 - l1 - l2, l1, l2};
}

NestingMap build_nesting(const TriMesh& fine, const TriMesh& coarse) {
  if (fine.level < 1 || coarse.level < 1)
    throw InvalidArgument("build_nesting: both meshes must be structured");
  if (fine.level <= coarse.level)
    throw InvalidArgument("build_nesting: fine level " + std::to_string(fine.level) +
                          " is not finer than coarse level " + std::to_string(coarse.level));
  const std::size_t nc = std::size_t{1} << coarse.level;
  NestingMap map;
  map.fine_level = fine.level;
  map.coarse_level = coarse.level;
  map.parent.resize(fine.num_triangles());
  for (std::size_t t = 0; t < fine.num_triangles(); ++t) {
    const Point c = fine.barycenter(t);
    const auto i = std::min(nc - 1, static_cast<std::size_t>(c.x / coarse.h));
    const auto j = std::min(nc - 1, static_cast<std::size_t>(c.y / coarse.h));
    const double lx = c.x - static_cast<double>(i) * coarse.h;
    const double ly = c.y - static_cast<double>(j) * coarse.h;
    const std::size_t parent = 2 * (j * nc + i) + (ly > lx ? 1 : 0);
    for (double l : barycentric(coarse, parent, c))
      if (l < -1e-12) throw Error("build_nesting: fine triangle not contained in coarse parent");
    map.parent[t] = parent;
  }
  return map;
}

void write_mesh_listing(const TriMesh& mesh, std::ostream& out) {
  const auto precision = out.precision(17);
  out << "# level " << mesh.level << " h " << mesh.h << '\n';
  out << "vertices " << mesh.vertices.size() << '\n';
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    out << v << ' ' << mesh.vertices[v].x << ' ' << mesh.vertices[v].y << '\n';
  out << "triangles " << mesh.triangles.size() << '\n';
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    out << t << ' ' << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
  }
  out.precision(precision);
}

}  // namespace dgasm
